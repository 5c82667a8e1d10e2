#pragma once

// Test-only oracles, kept independent of the library's implementation paths:
// direct-sum transforms, finite differences, exhaustive enumeration.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mrms/common.hpp"
#include "mrms/tensor.hpp"

namespace oracle {

using cplx = std::complex<double>;

// O(L^2) direct-sum DFT.
inline std::vector<cplx> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            acc += x[t] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

inline std::vector<cplx> naive_idft(const std::vector<cplx>& spec) {
    const std::size_t n = spec.size();
    std::vector<cplx> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        cplx acc(0.0, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            acc += spec[k] * cplx(std::cos(ang), std::sin(ang));
        }
        out[t] = acc / static_cast<double>(n);
    }
    return out;
}

// Magnitudes of bins 0..floor(L/2), zero-padded to L.
inline std::vector<double> naive_fft_magnitude(const std::vector<double>& x) {
    auto spec = naive_dft(x);
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t k = 0; k <= x.size() / 2; ++k) out[k] = std::abs(spec[k]);
    return out;
}

// Orthonormal DCT-II by the defining cosine sum.
inline std::vector<double> naive_dct(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            s += x[t] * std::cos(M_PI * (2.0 * static_cast<double>(t) + 1.0) *
                                 static_cast<double>(k) / (2.0 * static_cast<double>(n)));
        const double c = k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                                : std::sqrt(2.0 / static_cast<double>(n));
        out[k] = c * s;
    }
    return out;
}

// Analytic-signal magnitude via the naive DFT route.
inline std::vector<double> naive_hilbert_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    auto spec = naive_dft(x);
    if (n % 2 == 0) {
        for (std::size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
        for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
    } else {
        for (std::size_t k = 1; k <= (n - 1) / 2; ++k) spec[k] *= 2.0;
        for (std::size_t k = (n + 1) / 2; k < n; ++k) spec[k] = 0.0;
    }
    auto analytic = naive_idft(spec);
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = std::abs(analytic[t]);
    return out;
}

inline double max_rel_err(const std::vector<double>& got, const std::vector<double>& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max({std::abs(got[i]), std::abs(want[i]), 1.0});
        worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t probes = 0;
};

// Central differences against the analytic gradient of a scalar function.
// `forward` must be deterministic and free of side effects that change its
// value between calls. Probes `n_probes` random coordinates of each tensor
// in `params` (all coordinates if the tensor is smaller).
inline GradCheckResult grad_check(const std::function<double()>& forward,
                                  const std::function<void()>& backward_once,
                                  std::vector<mrms::Tensor> params, std::mt19937_64& rng,
                                  std::size_t n_probes = 20, double h = 1e-5) {
    for (auto& p : params) p.zero_grad();
    backward_once();
    GradCheckResult res;
    for (auto& p : params) {
        std::vector<std::size_t> coords;
        if (p.size() <= n_probes) {
            for (std::size_t i = 0; i < p.size(); ++i) coords.push_back(i);
        } else {
            for (std::size_t i = 0; i < n_probes; ++i)
                coords.push_back(rng() % p.size());
        }
        for (std::size_t c : coords) {
            const double orig = p.data()[c];
            p.data()[c] = orig + h;
            const double fp = forward();
            p.data()[c] = orig - h;
            const double fm = forward();
            p.data()[c] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = p.grad()[c];
            const double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-3);
            res.max_rel_err = std::max(res.max_rel_err, std::abs(numeric - analytic) / denom);
            ++res.probes;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Exhaustive combinatorial oracles

// All maximal cliques (size >= 2) of the "rank difference < cd" graph, by
// subset enumeration. k must stay small.
inline std::vector<std::vector<std::size_t>> brute_force_cliques(const std::vector<double>& ranks,
                                                                 double cd) {
    const std::size_t k = ranks.size();
    std::vector<unsigned> valid_masks;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
        if (__builtin_popcount(mask) < 2) continue;
        bool ok = true;
        for (std::size_t i = 0; i < k && ok; ++i)
            for (std::size_t j = i + 1; j < k && ok; ++j)
                if ((mask >> i & 1) && (mask >> j & 1))
                    if (!(std::abs(ranks[i] - ranks[j]) < cd)) ok = false;
        if (ok) valid_masks.push_back(mask);
    }
    std::vector<std::vector<std::size_t>> cliques;
    for (unsigned mask : valid_masks) {
        bool maximal = true;
        for (unsigned other : valid_masks)
            if (other != mask && (other & mask) == mask) maximal = false;
        if (!maximal) continue;
        std::vector<std::size_t> clique;
        for (std::size_t i = 0; i < k; ++i)
            if (mask >> i & 1) clique.push_back(i);
        cliques.push_back(std::move(clique));
    }
    return cliques;
}

// O(n^2) domination check: point i is on the frontier iff no other point has
// cost <= and score >= with at least one strict.
inline std::vector<std::size_t> brute_force_pareto(const std::vector<double>& cost,
                                                   const std::vector<double>& score) {
    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < cost.size() && !dominated; ++j) {
            if (j == i) continue;
            if (cost[j] <= cost[i] && score[j] >= score[i] &&
                (cost[j] < cost[i] || score[j] > score[i]))
                dominated = true;
        }
        if (!dominated) frontier.push_back(i);
    }
    std::stable_sort(frontier.begin(), frontier.end(), [&](std::size_t a, std::size_t b) {
        if (cost[a] != cost[b]) return cost[a] < cost[b];
        return a < b;
    });
    return frontier;
}

// ---------------------------------------------------------------------------
// Misc

// 1-nearest-neighbour Euclidean classifier.
inline int one_nn_predict(const std::vector<std::vector<double>>& train_x,
                          const std::vector<int>& train_y, const std::vector<double>& query) {
    double best = 1e300;
    int label = -1;
    for (std::size_t i = 0; i < train_x.size(); ++i) {
        double d = 0.0;
        for (std::size_t t = 0; t < query.size(); ++t) {
            const double diff = train_x[i][t] - query[t];
            d += diff * diff;
        }
        if (d < best) {
            best = d;
            label = train_y[i];
        }
    }
    return label;
}

// Unique scratch directory under the system temp root.
inline std::filesystem::path make_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("mrms_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace oracle
