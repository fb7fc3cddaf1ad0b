"""Active kernel set, resolved once at import via CROSSPHISH_BACKEND."""

from .backend import active_backend

BACKEND = active_backend()

if BACKEND == "numba":
    from .kernels_nb import (  # noqa: F401
        best_split_for_feature,
        knn_sorted,
        predict_margin,
        shap_interventional,
    )
else:
    from .kernels_np import (  # noqa: F401
        best_split_for_feature,
        knn_sorted,
        predict_margin,
        shap_interventional,
    )
