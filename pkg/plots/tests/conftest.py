import csv

import pytest


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def fixture_csv(tmp_path):
    """Factory for small valid CSVs per figure kind."""

    def make(kind, name=None):
        path = tmp_path / (name or f"{kind.replace('-', '_')}.csv")
        if kind == "sweep":
            header = ["controller", "sensitivity", "hop", "n_seeds", "tts_mean_h", "tts_std_h"]
            rows = [
                ["softmax", s, h, 3, 3000 - 120 * h + 40 * abs(s - 8), 25.0]
                for s in (1, 2, 4, 8, 16)
                for h in (2, 8)
            ]
            rows.append(["homo", 0, 0, 3, 3400.0, 0.0])
        elif kind == "heatmap":
            header = ["tau_hours", "alpha_upper", "tts_homo_mean_h", "tts_hetero_mean_h",
                      "improvement_pct", "n_seeds"]
            rows = [
                [t, a, 3000, 3000 * (1 - imp / 100), imp, 3]
                for t in (0.0, 0.5, 1.0)
                for a, imp in ((0.5, 12 * t - 1), (0.65, 15 * t + 2), (0.8, 30 * t + 3))
            ]
        elif kind == "robustness":
            header = ["controller", "perturb_alpha", "n_reps", "tts_mean_h", "tts_std_h",
                      "tts_min_h", "tts_max_h"]
            rows = [
                ["softmax", a, 20, 2800 + 500 * a, 60 + 100 * a, 2700 + 400 * a, 2950 + 700 * a]
                for a in (0.0, 0.25, 0.5, 0.75, 1.0)
            ]
            rows.append(["homo", "", 1, 3600, 0, 3600, 3600])
        elif kind == "importance":
            header = ["link_id", "hop_distance", "importance", "x0", "y0", "x1", "y1"]
            rows = [
                [i, d, max(0.0, 1.0 / (1 + d) - 0.01 * i), 10 * i, 5 * d, 10 * i + 8, 5 * d + 4]
                for i, d in enumerate([0, 1, 1, 2, 2, 3, 4, 5, 6, 7])
            ]
        elif kind == "pressure-profile":
            header = ["cycle", "feeder_id", "hop", "pressure"]
            rows = [
                [c, f, h, 0.4 - 0.1 * h - 0.02 * f + 0.05 * c]
                for c in (0, 1, 2)
                for f in range(8)
                for h in (0, 2, 8)
            ]
        elif kind == "timeseries-delta":
            header = ["time_s", "completed", "mean_density"]
            rows = [[96 * k, 12 * k, 0.002 * k] for k in range(40)]
        else:
            raise ValueError(kind)
        return write_csv(path, header, rows)

    return make
