"""OFDM-based ISAC SAR simulation: waveforms, echoes, compression, back-projection, KPIs."""

__version__ = "0.1.0"
