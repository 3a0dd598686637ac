#pragma once

#include <qgibbs/c0.hpp>
#include <qgibbs/padic.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace qgibbs {

/// Deterministic seeded sampling of p-adic values. mt19937_64 plus explicit
/// rejection keeps streams identical across platforms (std distributions are
/// implementation-defined and never used here).
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v = eng_();
        while (v >= limit) v = eng_();
        return v % bound;
    }

    long next_in(long lo, long hi) { // inclusive
        return lo + static_cast<long>(next(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool coin() { return next(2) == 1; }

    /// Random p-adic unit a/b with p dividing neither side, |.|_p = 1.
    mpq_class unit_rational(unsigned long p, unsigned long magnitude = 1000) {
        const auto coprime = [&](unsigned long span) {
            unsigned long v = static_cast<unsigned long>(next(span)) + 1;
            while (v % p == 0) ++v;
            return v;
        };
        mpq_class q(coprime(magnitude), coprime(magnitude));
        q.canonicalize();
        if (coin()) q = -q;
        return q;
    }

    /// Random rational with |x|_p = p^{-e} exactly.
    mpq_class rational_with_valuation(unsigned long p, long e, unsigned long magnitude = 1000) {
        mpq_class q = unit_rational(p, magnitude);
        for (long i = 0; i < e; ++i) q *= static_cast<unsigned long>(p);
        for (long i = 0; i < -e; ++i) q /= static_cast<unsigned long>(p);
        return q;
    }

    /// Random rational in the closed ball |x|_p <= p^{-min_valuation}
    /// (including occasional exact zeros).
    mpq_class rational_in_ball(unsigned long p, long min_valuation, unsigned long magnitude = 1000) {
        if (next(16) == 0) return mpq_class(0);
        return rational_with_valuation(p, min_valuation + static_cast<long>(next(4)), magnitude);
    }

    template <padic_number Num>
    Num value_in_ball(const typename Num::Context& ctx, long min_valuation) {
        return Num::from_mpq(ctx, rational_in_ball(ctx.prime.value(), min_valuation));
    }

    template <padic_number Num>
    C0Vector<Num> vector_in_ball(const typename Num::Context& ctx, unsigned q_trunc,
                                 long min_valuation) {
        C0Vector<Num> out(ctx, q_trunc);
        for (unsigned i = 1; i <= q_trunc; ++i) {
            out.set(i, value_in_ball<Num>(ctx, min_valuation));
        }
        return out;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace qgibbs
