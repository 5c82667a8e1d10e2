#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mrms/common.hpp"
#include "mrms/fft.hpp"

namespace mrms {

// One univariate time series: raw values plus its class label.
struct Series {
    std::vector<double> values;
    int label = 0;

    std::size_t length() const { return values.size(); }
};

// The eight input representations. Serialized names are exactly the enum
// spellings below; configs and result files round-trip through them.
enum class RepKind { TIME, DT1, DT2, HLB_MAG, DWT_A, FFT_MAG, DCT, ACF };

inline constexpr std::array<RepKind, 8> kAllRepKinds = {
    RepKind::TIME,  RepKind::DT1,     RepKind::DT2, RepKind::HLB_MAG,
    RepKind::DWT_A, RepKind::FFT_MAG, RepKind::DCT, RepKind::ACF};

inline const char* rep_kind_name(RepKind k) {
    switch (k) {
        case RepKind::TIME: return "TIME";
        case RepKind::DT1: return "DT1";
        case RepKind::DT2: return "DT2";
        case RepKind::HLB_MAG: return "HLB_MAG";
        case RepKind::DWT_A: return "DWT_A";
        case RepKind::FFT_MAG: return "FFT_MAG";
        case RepKind::DCT: return "DCT";
        case RepKind::ACF: return "ACF";
    }
    throw std::invalid_argument("rep_kind_name: unknown RepKind");
}

inline RepKind rep_kind_from_name(const std::string& name) {
    for (RepKind k : kAllRepKinds)
        if (name == rep_kind_name(k)) return k;
    std::string valid;
    for (RepKind k : kAllRepKinds) {
        if (!valid.empty()) valid += ", ";
        valid += rep_kind_name(k);
    }
    throw std::invalid_argument("unknown representation '" + name + "' (valid: " + valid + ")");
}

// Channel-stacked representations of one series, row-major R x L.
struct RepStack {
    std::vector<double> channels;  // row r at [r*length, (r+1)*length)
    std::vector<RepKind> kinds;
    std::size_t length = 0;

    std::size_t rows() const { return kinds.size(); }
    const double* row(std::size_t r) const { return channels.data() + r * length; }
};

// Zero mean, unit population standard deviation. Zero-variance input maps to
// all zeros so constant series stay classifiable instead of erroring.
inline std::vector<double> z_normalize(const std::vector<double>& x) {
    require(!x.empty(), "z_normalize: empty input");
    require(all_finite(x), "z_normalize: input contains non-finite values");
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    const double sd = std::sqrt(var);
    std::vector<double> out(x.size());
    if (sd < 1e-8) return out;  // all zeros
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
    return out;
}

// Forward difference with the last element replicated so length is kept.
inline std::vector<double> derivative(const std::vector<double>& x, int order) {
    require(order == 1 || order == 2, "derivative: order must be 1 or 2");
    require(x.size() >= 3, "derivative: need length >= 3");
    std::vector<double> d(x.size());
    auto once = [](const std::vector<double>& in, std::vector<double>& out) {
        const std::size_t n = in.size();
        for (std::size_t t = 0; t + 1 < n; ++t) out[t] = in[t + 1] - in[t];
        out[n - 1] = out[n - 2];
    };
    once(x, d);
    if (order == 2) {
        std::vector<double> d2(x.size());
        once(d, d2);
        return d2;
    }
    return d;
}

// |X[k]| for k = 0..floor(L/2), zero-padded on the right to length L.
inline std::vector<double> fft_magnitude(const std::vector<double>& x) {
    require(x.size() >= 4, "fft_magnitude: need length >= 4");
    auto spec = fft::forward(x);
    std::vector<double> out(x.size(), 0.0);
    const std::size_t half = x.size() / 2;
    for (std::size_t k = 0; k <= half; ++k) out[k] = std::abs(spec[k]);
    return out;
}

// Orthonormal DCT-II via Makhoul's even/odd reordering and a length-L DFT:
// X[k] = c_k * sum_t x[t] cos(pi (2t+1) k / (2L)).
inline std::vector<double> dct(const std::vector<double>& x) {
    const std::size_t n = x.size();
    require(n >= 4, "dct: need length >= 4");
    std::vector<fft::cplx> v(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) v[i] = x[2 * i];
    for (std::size_t i = 0; i < n / 2; ++i) v[n - 1 - i] = x[2 * i + 1];
    fft::transform(v, false);
    std::vector<double> out(n);
    const double c0 = std::sqrt(1.0 / static_cast<double>(n));
    const double ck = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = -M_PI * static_cast<double>(k) / (2.0 * static_cast<double>(n));
        const double s = std::cos(ang) * v[k].real() - std::sin(ang) * v[k].imag();
        out[k] = (k == 0 ? c0 : ck) * s;
    }
    return out;
}

// Biased sample autocorrelation, normalized by the lag-0 energy so every
// coefficient lies in [-1, 1]. Expects z-normalized input from the pipeline.
inline std::vector<double> acf(const std::vector<double>& x) {
    const std::size_t n = x.size();
    require(n >= 4, "acf: need length >= 4");
    double energy = 0.0;
    for (double v : x) energy += v * v;
    std::vector<double> out(n, 0.0);
    if (energy < 1e-12) return out;
    for (std::size_t tau = 0; tau < n; ++tau) {
        double s = 0.0;
        for (std::size_t t = 0; t + tau < n; ++t) s += x[t] * x[t + tau];
        out[tau] = s / energy;
    }
    return out;
}

// Analytic-signal magnitude by the frequency-domain method: zero the
// negative frequencies, double the positive ones, invert, take |.|.
inline std::vector<double> hilbert_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    require(n >= 8, "hilbert_magnitude: need length >= 8");
    auto spec = fft::forward(x);
    if (n % 2 == 0) {
        for (std::size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
        for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
    } else {
        for (std::size_t k = 1; k <= (n - 1) / 2; ++k) spec[k] *= 2.0;
        for (std::size_t k = (n + 1) / 2; k < n; ++k) spec[k] = 0.0;
    }
    auto analytic = fft::inverse(std::move(spec));
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = std::abs(analytic[t]);
    return out;
}

// Single-level Haar approximation, upsampled back to length L by repeating
// each coefficient twice and truncating. Odd tails replicate the last sample.
inline std::vector<double> dwt_approx(const std::vector<double>& x) {
    const std::size_t n = x.size();
    require(n >= 4, "dwt_approx: need length >= 4");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<double> coef((n + 1) / 2);
    for (std::size_t i = 0; 2 * i < n; ++i) {
        const double a = x[2 * i];
        const double b = (2 * i + 1 < n) ? x[2 * i + 1] : x[2 * i];
        coef[i] = (a + b) * inv_sqrt2;
    }
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = coef[t / 2];
    return out;
}

inline std::vector<double> compute_representation(const std::vector<double>& z, RepKind kind) {
    switch (kind) {
        case RepKind::TIME: return z;
        case RepKind::DT1: return derivative(z, 1);
        case RepKind::DT2: return derivative(z, 2);
        case RepKind::HLB_MAG: return hilbert_magnitude(z);
        case RepKind::DWT_A: return dwt_approx(z);
        case RepKind::FFT_MAG: return fft_magnitude(z);
        case RepKind::DCT: return dct(z);
        case RepKind::ACF: return acf(z);
    }
    throw std::invalid_argument("compute_representation: unknown RepKind");
}

// Z-normalize the raw series once, derive every requested representation from
// it, then z-normalize each channel independently (degenerate channels become
// zeros). Rows follow the order of `kinds`.
inline RepStack build_stack(const Series& s, const std::vector<RepKind>& kinds) {
    require(!kinds.empty(), "build_stack: kinds must be non-empty");
    for (std::size_t i = 0; i < kinds.size(); ++i)
        for (std::size_t j = i + 1; j < kinds.size(); ++j)
            require(kinds[i] != kinds[j],
                    std::string("build_stack: duplicate kind ") + rep_kind_name(kinds[i]));
    require(s.length() >= 4, "build_stack: need series length >= 4");

    const std::vector<double> z = z_normalize(s.values);
    RepStack stack;
    stack.kinds = kinds;
    stack.length = s.length();
    stack.channels.reserve(kinds.size() * s.length());
    for (RepKind kind : kinds) {
        std::vector<double> channel = z_normalize(compute_representation(z, kind));
        stack.channels.insert(stack.channels.end(), channel.begin(), channel.end());
    }
    return stack;
}

// Representation presets. The Minimal/Default regime names come from the
// evaluation vocabulary; the memberships are this library's configuration and
// can be overridden with an explicit kind list.
inline std::vector<RepKind> preset_kinds(const std::string& preset) {
    if (preset == "raw") return {RepKind::TIME};
    if (preset == "minimal") return {RepKind::TIME, RepKind::DT1, RepKind::FFT_MAG};
    if (preset == "default")
        return std::vector<RepKind>(kAllRepKinds.begin(), kAllRepKinds.end());
    throw std::invalid_argument("unknown representation preset '" + preset +
                                "' (valid: raw, minimal, default)");
}

}  // namespace mrms
