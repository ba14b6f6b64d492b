from datagen.blobs import gen_blobs
from datagen.dataset import OOD_LABEL, Dataset, export_csv
from datagen.idx import load_idx, write_idx
from datagen.longtail import ImbalanceProfile, make_longtail_profile, subsample_longtail
from datagen.ood import gen_ood

__all__ = [
    "OOD_LABEL",
    "Dataset",
    "ImbalanceProfile",
    "export_csv",
    "gen_blobs",
    "gen_ood",
    "load_idx",
    "make_longtail_profile",
    "subsample_longtail",
    "write_idx",
]
