"""
Sheets, dispersion function, root finders and expansions
"""
