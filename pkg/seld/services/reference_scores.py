# seld/services/reference_scores.py
"""Puntuaciones publicadas del método en STARSS23 (dev-test), por sala.

Cada celda es (ER≤20°, F≤20°, LE_CD en grados, LR_CD, E_SELD) con F y LR como
proporciones. Sirven para comprobar la aritmética de ``e_seld`` y como
referencia en los informes; no son reproducibles con datos sintéticos.
"""

CONDITIONS = ("pretrain", "finetune", "meta")

REFERENCE_SCORES = {
    "fold3_room4": {
        "pretrain": (0.624, 0.445, 17.8, 0.646, 0.408),
        "finetune": (0.574, 0.404, 17.6, 0.612, 0.414),
        "meta": (0.603, 0.298, 21.5, 0.544, 0.470),
    },
    "fold3_room6": {
        "pretrain": (0.639, 0.380, 18.0, 0.653, 0.427),
        "finetune": (0.607, 0.405, 17.2, 0.638, 0.415),
        "meta": (0.594, 0.404, 17.4, 0.611, 0.419),
    },
    "fold3_room7": {
        "pretrain": (0.610, 0.311, 23.6, 0.599, 0.458),
        "finetune": (0.606, 0.307, 24.1, 0.605, 0.457),
        "meta": (0.660, 0.208, 22.5, 0.483, 0.523),
    },
    "fold3_room9": {
        "pretrain": (0.673, 0.437, 19.1, 0.787, 0.389),
        "finetune": (0.601, 0.466, 18.6, 0.782, 0.364),
        "meta": (0.608, 0.475, 18.3, 0.733, 0.375),
    },
    "fold3_room12": {
        "pretrain": (0.685, 0.280, 26.8, 0.431, 0.531),
        "finetune": (0.659, 0.298, 26.1, 0.436, 0.518),
        "meta": (0.689, 0.330, 33.3, 0.463, 0.520),
    },
    "fold3_room13": {
        "pretrain": (0.650, 0.377, 17.5, 0.509, 0.465),
        "finetune": (0.599, 0.394, 16.9, 0.488, 0.453),
        "meta": (0.594, 0.361, 15.9, 0.371, 0.488),
    },
    "fold3_room14": {
        "pretrain": (0.633, 0.402, 23.2, 0.553, 0.452),
        "finetune": (0.582, 0.374, 23.7, 0.540, 0.450),
        "meta": (0.613, 0.286, 24.8, 0.472, 0.498),
    },
    "fold3_room21": {
        "pretrain": (0.757, 0.193, 20.5, 0.393, 0.571),
        "finetune": (0.750, 0.216, 18.9, 0.314, 0.581),
        "meta": (0.735, 0.189, 20.6, 0.438, 0.556),
    },
    "fold3_room22": {
        "pretrain": (0.850, 0.114, 31.6, 0.456, 0.614),
        "finetune": (0.818, 0.128, 29.5, 0.438, 0.604),
        "meta": (0.800, 0.167, 29.0, 0.488, 0.577),
    },
    "fold4_room2": {
        "pretrain": (0.809, 0.062, 47.8, 0.724, 0.572),
        "finetune": (0.774, 0.082, 41.3, 0.724, 0.550),
        "meta": (0.753, 0.154, 33.0, 0.757, 0.506),
    },
    "fold4_room8": {
        "pretrain": (0.716, 0.317, 22.5, 0.540, 0.496),
        "finetune": (0.716, 0.336, 21.0, 0.494, 0.501),
        "meta": (0.702, 0.307, 23.2, 0.494, 0.507),
    },
    "fold4_room10": {
        "pretrain": (0.792, 0.363, 23.8, 0.661, 0.475),
        "finetune": (0.708, 0.417, 21.5, 0.720, 0.423),
        "meta": (0.651, 0.358, 20.2, 0.782, 0.406),
    },
    "fold4_room15": {
        "pretrain": (0.582, 0.333, 16.5, 0.428, 0.478),
        "finetune": (0.563, 0.335, 15.5, 0.426, 0.472),
        "meta": (0.539, 0.434, 19.3, 0.590, 0.406),
    },
    "fold4_room16": {
        "pretrain": (0.601, 0.398, 21.7, 0.551, 0.443),
        "finetune": (0.584, 0.405, 21.9, 0.549, 0.438),
        "meta": (0.607, 0.343, 21.6, 0.487, 0.474),
    },
    "fold4_room23": {
        "pretrain": (0.813, 0.254, 26.2, 0.404, 0.575),
        "finetune": (0.746, 0.265, 24.9, 0.436, 0.546),
        "meta": (0.676, 0.318, 25.8, 0.473, 0.507),
    },
    "fold4_room24": {
        "pretrain": (0.828, 0.262, 19.4, 0.410, 0.566),
        "finetune": (0.779, 0.257, 19.7, 0.436, 0.549),
        "meta": (0.782, 0.308, 24.4, 0.427, 0.546),
    },
    "Overall": {
        "pretrain": (0.707, 0.230, 22.8, 0.395, 0.552),
        "finetune": (0.677, 0.242, 22.3, 0.402, 0.539),
        "meta": (0.672, 0.260, 21.9, 0.410, 0.531),
    },
}
