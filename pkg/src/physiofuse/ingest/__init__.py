"""Recording ingestion: EDF, CSV and seeded synthetic sessions."""
from .edf import EdfHeader, EdfSignalHeader, parse_edf, parse_header, read_edf, write_edf
from .records import (
    DEFAULT_LABEL_MAP,
    MODALITY_ORDER,
    Channel,
    ChannelMeta,
    LabelMap,
    Modality,
    SignalRecord,
)
from .synthetic import (
    ClassSpec,
    SynthChannel,
    SynthConfig,
    config_from_dict,
    default_config,
    generate_sessions,
    generate_synthetic,
    load_config,
)
from .tabular import read_csv_record, read_kss_sidecar, write_csv_record, write_kss_sidecar

__all__ = [
    "Channel", "ChannelMeta", "ClassSpec", "DEFAULT_LABEL_MAP", "EdfHeader", "EdfSignalHeader",
    "LabelMap", "MODALITY_ORDER", "Modality", "SignalRecord", "SynthChannel", "SynthConfig",
    "config_from_dict", "default_config", "generate_sessions", "generate_synthetic",
    "load_config", "parse_edf", "parse_header", "read_csv_record", "read_edf",
    "read_kss_sidecar", "write_csv_record", "write_edf", "write_kss_sidecar",
]
