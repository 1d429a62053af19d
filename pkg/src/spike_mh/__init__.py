"""Spiking policies trained with reward-driven Metropolis-Hastings sampling."""
