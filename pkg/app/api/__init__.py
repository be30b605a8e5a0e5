"""
API endpoints and routing
""" 