"""
Logging utility functions
"""
import os
from datetime import datetime
from app.config.settings import LOG_DIR, logger


def log_run_summary(command, records, wall_time):
    """
    Append a summary of one CLI run to the run summary log.

    Args:
        command (str): Subcommand that ran
        records (list): ResultRecord objects produced by the run
        wall_time (float): Seconds spent in the run

    Returns:
        bool: True if the summary was written, False otherwise
    """
    try:
        if not os.path.exists(LOG_DIR):
            os.makedirs(LOG_DIR)

        timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')

        log_entry = f"\n{'='*80}\n"
        log_entry += f"Run Summary ({command}) - {timestamp}\n"
        log_entry += f"{'='*80}\n\n"

        if records:
            log_entry += f"{len(records)} record(s), {wall_time:.3f} s:\n\n"
            for i, record in enumerate(records, 1):
                log_entry += f"Record {i}:\n"
                log_entry += f"  Regime: {record.regime}\n"
                log_entry += f"  Epsilon: {record.config.get('epsilon')}\n"
                for singularity in record.singularities:
                    log_entry += (f"  {singularity.kind.value}: {singularity.location} "
                                  f"(sheet {singularity.sheet}, {singularity.method.value}, "
                                  f"|D|={singularity.residual:.2e})\n")
                if record.order_fit is not None:
                    log_entry += f"  Fitted remainder slope: {record.order_fit.fitted_slope:.3f}\n"
                if record.error:
                    log_entry += f"  Error: {record.error}\n"
                log_entry += "-" * 50 + "\n"
        else:
            log_entry += "No records were produced.\n"

        summary_log_path = os.path.join(LOG_DIR, 'run_summary_log.txt')
        with open(summary_log_path, 'a', encoding='utf-8', errors='replace') as f:
            f.write(log_entry)

        logger.info("Run summary logged successfully")
        return True
    except Exception as e:
        logger.error(f"Error logging run summary: {str(e)}")
        return False
