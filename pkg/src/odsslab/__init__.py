"""Delay-scale multicarrier modem laboratory.

Modules
-------
mellin       discrete Mellin transform on geometric grids
waveforms    chirplet prototype, PHYDYAS window, subcarrier bank, ambiguity
odss_modem   ODSS parameters, transform, (de)modulation, MMSE decoding
baselines    OFDM and OTFS reference transceivers
channel      wideband delay-scale channel emulation and noise
harness      experiments, CSV export and the command line driver
"""

__version__ = "0.1.0"
