"""Integer space-time block codes: construction, fixed-point encoding,
code metrics, and MIMO link simulation."""

__version__ = "0.1.0"

from .constellation import Constellation, Papr, make_qam, set_papr
from .designs import (Codeword, LinearDesign, alamouti_design, effective_channel,
                      encode, get_design, golden_design, integer_design,
                      mean_entry_power, normalize)
from .errors import BudgetError
from .fixedpoint import (QuantizerConfig, min_bits_integer_code, quantize,
                         quantized_encode)
from .metrics import (DifferenceSpectrum, code_papr, difference_spectrum,
                      normalized_min_trace, papr_qam_closed_form)
from .channel import ChannelRealization, operating_point, sample_channel, substream, transmit
from .decoder import DetectionProblem, ml_decode_exhaustive, sphere_decode
from .montecarlo import SimConfig, SimResult, run_cer, run_quantization_sweep, wilson_interval

__all__ = [
    "BudgetError", "ChannelRealization", "Codeword", "Constellation",
    "DetectionProblem", "DifferenceSpectrum", "LinearDesign", "Papr",
    "QuantizerConfig", "SimConfig", "SimResult", "alamouti_design", "code_papr",
    "difference_spectrum", "effective_channel", "encode", "get_design",
    "golden_design", "integer_design", "make_qam", "mean_entry_power",
    "min_bits_integer_code", "ml_decode_exhaustive", "normalize",
    "normalized_min_trace", "operating_point", "papr_qam_closed_form", "quantize",
    "quantized_encode", "run_cer", "run_quantization_sweep", "sample_channel",
    "set_papr", "sphere_decode", "substream", "transmit", "wilson_interval",
]
