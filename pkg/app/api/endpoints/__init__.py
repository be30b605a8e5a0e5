"""
API endpoint handlers
""" 