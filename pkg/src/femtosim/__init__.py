"""Energy-aware UE association and probabilistic OFDMA access for femtocell networks."""
