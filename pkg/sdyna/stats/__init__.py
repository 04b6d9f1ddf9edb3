"""Chi-square statistics"""
