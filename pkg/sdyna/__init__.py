"""sdyna - learn and solve Factored MDPs online with decision trees"""

__version__ = '0.2.0'
__author__ = 'sdyna contributors'
