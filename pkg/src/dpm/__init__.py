"""Dialogue-act pattern mining for learner-chatbot transcripts."""

__version__ = "0.1.0"
