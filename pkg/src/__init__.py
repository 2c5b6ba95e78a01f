# src package initialization
"""
Source package for the spacing toolkit modules
"""
