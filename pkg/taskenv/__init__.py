"""
taskenv - task-environment modeling, simulation and analysis
"""

__version__ = "0.1.0"
__author__ = "taskenv developers"
