#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mrms::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey. n must be a power of two.
inline void transform_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    int levels = 0;
    while ((std::size_t(1) << levels) < n) ++levels;

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = 0;
        for (int b = 0; b < levels; ++b) j |= ((i >> b) & 1u) << (levels - 1 - b);
        if (j > i) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                cplx u = a[i + j];
                cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein chirp-z transform: DFT of arbitrary length via a power-of-two
// cyclic convolution. Angles use k^2 mod 2n to stay accurate for large k.
inline void transform_bluestein(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m / 2 <= n) m <<= 1;  // m >= 2n + 1

    const double dir = inverse ? 1.0 : -1.0;
    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        uint64_t sq = (static_cast<uint64_t>(k) * k) % (2 * n);
        double ang = dir * M_PI * static_cast<double>(sq) / static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }

    std::vector<cplx> av(m, cplx(0.0, 0.0));
    std::vector<cplx> bv(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) av[k] = a[k] * chirp[k];
    bv[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) bv[k] = bv[m - k] = std::conj(chirp[k]);

    transform_pow2(av, false);
    transform_pow2(bv, false);
    for (std::size_t k = 0; k < m; ++k) av[k] *= bv[k];
    transform_pow2(av, true);

    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = av[k] * scale * chirp[k];
}

// Unnormalized DFT (forward) or unscaled inverse DFT. Callers using the
// inverse must divide by n themselves.
inline void transform(std::vector<cplx>& a, bool inverse) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        transform_pow2(a, inverse);
    else
        transform_bluestein(a, inverse);
}

inline std::vector<cplx> forward(const std::vector<double>& x) {
    std::vector<cplx> a(x.begin(), x.end());
    transform(a, false);
    return a;
}

// Normalized inverse: recovers the sequence whose forward DFT is `spectrum`.
inline std::vector<cplx> inverse(std::vector<cplx> spectrum) {
    const std::size_t n = spectrum.size();
    transform(spectrum, true);
    const double scale = n ? 1.0 / static_cast<double>(n) : 1.0;
    for (auto& v : spectrum) v *= scale;
    return spectrum;
}

}  // namespace mrms::fft
