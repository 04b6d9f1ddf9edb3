# Utility modules for sdyna
