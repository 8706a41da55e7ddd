"""Frequency-domain fault location on a two-terminal line by electromagnetic time reversal."""
from .emtr import EnergyProfile, LocationResult, NoLocalizationError, ScanGrid, emtr1_profile, emtr2_profile, emtr3_profile, locate
from .forward import fault_source, terminal_spectra_faulted, terminal_spectrum_ideal, terminal_spectrum_ref27
from .line import OPEN, FaultScenario, LineSpec, TerminationSpec
from .signal import FrequencyGrid, SampledRecord, Spectrum, spectrum_of, waveform_of

__version__ = "0.1.0"
