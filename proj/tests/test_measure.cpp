#include <qgibbs/literals.hpp>
#include <qgibbs/measure.hpp>
#include <qgibbs/sampling.hpp>

#include <gtest/gtest.h>

using namespace qgibbs;

namespace {

const Prime kP5 = Prime::checked(5);
const RationalContext kRc{kP5};
using R = PAdicRational;

R rat(long num, long den = 1) { return R::from_fraction(kRc, num, den); }

ModelSpec<R> homogeneous_spec(unsigned k, unsigned depth, long N, std::vector<R> tail,
                              MeasureKind kind = MeasureKind::quasi_gibbs) {
    return ModelSpec<R>{kRc, CayleyTree(k, depth),
                        CouplingAssignment<R>(rat(5), CouplingAssignment<R>::Homogeneous{N}),
                        WeightSequence<R>(kRc, std::move(tail)), kind};
}

BoundaryField<R> solved_field(const ModelSpec<R>& spec, unsigned depth) {
    const SolveResult<R> res = solve_fixed_point(spec, SolveOptions<R>{});
    return expand_field(spec, res.field, depth);
}

RawField<R> raw_of(const ModelSpec<R>& spec, const BoundaryField<R>& f, unsigned n) {
    return denormalize_field(spec, f, n);
}

} // namespace

TEST(Hamiltonian, AllEqualAndColoring) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -3, {rat(5)});
    const auto vertices = spec.tree.enumerate_volume(2);
    ASSERT_EQ(vertices.size(), 7u);

    Configuration all_equal{std::vector<std::uint8_t>(7, 1)};
    EXPECT_EQ(hamiltonian(spec, all_equal, 2), -3 * 6); // N |L_2|, |L_2| = 6

    // proper 2-coloring by level: no edge joins equal spins
    Configuration by_level{std::vector<std::uint8_t>(7, 0)};
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        by_level.spins[i] = static_cast<std::uint8_t>(vertices[i].level() % 2);
    }
    EXPECT_EQ(hamiltonian(spec, by_level, 2), 0);
}

TEST(Hamiltonian, MatchesEdgeOracle) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5)});
    const auto vertices = spec.tree.enumerate_volume(2);
    std::map<TreeVertex, std::size_t> index;
    for (std::size_t i = 0; i < vertices.size(); ++i) index.emplace(vertices[i], i);

    Sampler s(21);
    for (int t = 0; t < 100; ++t) {
        Configuration c{std::vector<std::uint8_t>(vertices.size(), 0)};
        for (auto& spin : c.spins) spin = static_cast<std::uint8_t>(s.next(2));
        // independent edge-by-edge count
        long long expected = 0;
        for (const auto& [x, y] : spec.tree.enumerate_edges(2)) {
            if (c.spins[index.at(x)] == c.spins[index.at(y)]) expected += -1;
        }
        EXPECT_EQ(hamiltonian(spec, c, 2), expected);
    }
}

TEST(Measure, SingleSiteHandEnumeration) {
    // k=1, n=1, two states: V_1 = {root, (1)}, four configurations.
    // Oracle: direct rational arithmetic from the defining formula with
    // theta = 5^-1, lambda = (1, 5), boundary h = (1, 2/3).
    const ModelSpec<R> spec = homogeneous_spec(1, 1, -1, {rat(5)});
    RawField<R> raw;
    raw.depth = 1;
    raw.values.emplace(TreeVertex::parse("(1)"), std::vector<R>{rat(1), rat(2, 3)});
    const FiniteVolumeMeasure<R> mu(spec, raw, 1);

    const mpq_class theta(1, 5);
    const mpq_class l0(1), l1(5), h0(1), h1(2, 3);
    // configurations (root spin, leaf spin): weight = theta^{[equal]} h_leaf l_root l_leaf
    const mpq_class w00 = theta * h0 * l0 * l0;
    const mpq_class w01 = h1 * l0 * l1;
    const mpq_class w10 = h0 * l1 * l0;
    const mpq_class w11 = theta * h1 * l1 * l1;
    const mpq_class z = w00 + w01 + w10 + w11;

    EXPECT_EQ(mu.partition_function().value(), z);
    const auto val = [&](std::uint8_t a, std::uint8_t b) {
        return mu.value(Configuration{{a, b}}).value();
    };
    EXPECT_EQ(val(0, 0), w00 / z);
    EXPECT_EQ(val(0, 1), w01 / z);
    EXPECT_EQ(val(1, 0), w10 / z);
    EXPECT_EQ(val(1, 1), w11 / z);
}

TEST(Measure, NormalizationExact) {
    for (long N : {0L, -1L, -2L}) {
        const ModelSpec<R> spec = homogeneous_spec(2, 2, N, {rat(5), rat(25)});
        const BoundaryField<R> f = solved_field(spec, 2);
        const FiniteVolumeMeasure<R> mu(spec, raw_of(spec, f, 2), 2);
        EXPECT_EQ(mu.total_mass(), R::one(kRc)) << "N = " << N;
    }
}

TEST(Measure, NullWeightKillsConfigurations) {
    // lambda(2) = 0: any configuration using spin 2 has measure exactly 0
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5), rat(0)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const FiniteVolumeMeasure<R> mu(spec, raw_of(spec, f, 2), 2);
    const auto sp = mu.space();
    Configuration c = sp.first();
    std::size_t touched = 0;
    do {
        if (c.touches_spin_at_least(2)) {
            ++touched;
            EXPECT_TRUE(mu.value(c).is_exact_zero());
        }
    } while (sp.next(c));
    EXPECT_GT(touched, 0u);
}

TEST(Partition, ThetaOneFactorizes) {
    // theta = 1: Z_n = (sum_j h_j lambda_j)^{|W_n|} * (sum_j lambda_j)^{|V_{n-1}|}
    const ModelSpec<R> spec = homogeneous_spec(2, 2, 0, {rat(5), rat(25)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const RawField<R> raw = raw_of(spec, f, 2);
    const FiniteVolumeMeasure<R> mu(spec, raw, 2);

    mpq_class site_boundary(0), site_free(0);
    const std::vector<mpq_class> lambda{1, 5, 25};
    const auto& h = raw.values.at(TreeVertex::parse("(1,1)"));
    for (unsigned j = 0; j < 3; ++j) {
        site_boundary += h[j].value() * lambda[j];
        site_free += lambda[j];
    }
    mpq_class expect = 1;
    for (int i = 0; i < 4; ++i) expect *= site_boundary; // |W_2| = 4
    for (int i = 0; i < 3; ++i) expect *= site_free;     // |V_1| = 3
    EXPECT_EQ(mu.partition_function().value(), expect);
}

TEST(Partition, SingleStateClosedForm) {
    // q_trunc = 0: one spin state, one configuration, Z_n = par^{N |L_n|}
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -2, {});
    RawField<R> raw;
    raw.depth = 2;
    for (unsigned level = 1; level <= 2; ++level) {
        for (const auto& x : spec.tree.enumerate_level(level)) {
            raw.values.emplace(x, std::vector<R>{rat(1)});
        }
    }
    const FiniteVolumeMeasure<R> mu(spec, raw, 2);
    EXPECT_EQ(mu.partition_function(), pow(rat(5), -2 * 6));
    EXPECT_EQ(mu.total_mass(), R::one(kRc));
}

TEST(Partition, NormBoundedByMaxWeight) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5), rat(25)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const FiniteVolumeMeasure<R> mu(spec, raw_of(spec, f, 2), 2);
    const auto sp = mu.space();
    Configuration c = sp.first();
    Valuation best = Valuation::infinite();
    do {
        best = min_exact(best, mu.unnormalized_weight(c).valuation());
    } while (sp.next(c));
    ASSERT_TRUE(best.is_finite());
    EXPECT_TRUE(mu.partition_function().valuation().norm_at_most(best.value()));
}

TEST(Compatibility, SolvedFieldExactAcrossShapes) {
    struct Case {
        unsigned k;
        unsigned n;
        std::vector<R> tail;
    };
    const std::vector<Case> cases{
        {2, 2, {rat(5)}},
        {3, 2, {rat(5)}},
        {2, 2, {rat(5), rat(25)}},
    };
    for (const auto& cs : cases) {
        const ModelSpec<R> spec = homogeneous_spec(cs.k, cs.n, -1, cs.tail);
        const BoundaryField<R> f = solved_field(spec, cs.n);
        const CompatibilityReport rep = check_compatibility(spec, f, cs.n);
        EXPECT_TRUE(rep.residuals.all_exact_zero())
            << "k=" << cs.k << " n=" << cs.n << " worst " << rep.residuals.worst_to_string();
    }
}

TEST(Compatibility, PeriodicThreeClassExact) {
    // solver and measure must agree on how edges map to coupling classes
    const ModelSpec<R> spec{kRc, CayleyTree(2, 3),
                            CouplingAssignment<R>(rat(5),
                                                  CouplingAssignment<R>::Periodic{3, {0, -1, -2}}),
                            WeightSequence<R>(kRc, {rat(5), rat(25)})};
    const SolveResult<R> res = solve_fixed_point(spec, SolveOptions<R>{});
    const BoundaryField<R> ex = expand_field(spec, res.field, 3);
    for (unsigned n : {1u, 2u}) {
        const CompatibilityReport rep = check_compatibility(spec, ex, n);
        EXPECT_TRUE(rep.residuals.all_exact_zero()) << "n = " << n;
    }
}

TEST(Compatibility, ThetaOneProductMeasure) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, 0, {rat(5), rat(25)});
    const BoundaryField<R> ti =
        BoundaryField<R>::translation_invariant(spec.weights.tail_vector());
    const CompatibilityReport rep = check_compatibility(spec, ti, 2);
    EXPECT_TRUE(rep.residuals.all_exact_zero());
}

TEST(Compatibility, RootMarginalIdentity) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5), rat(25)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const CompatibilityReport rep = check_compatibility(spec, f, 1);
    EXPECT_TRUE(rep.residuals.all_exact_zero());
}

TEST(Compatibility, FaultDetected) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5)});
    const BoundaryField<R> f = solved_field(spec, 2);
    auto values = std::get<typename BoundaryField<R>::Explicit>(f.rep()).values;
    C0Vector<R> v = values.at(TreeVertex::parse("(2)"));
    v.set(1, v[1] + rat(625)); // p^4 perturbation at a level-1 vertex
    values.insert_or_assign(TreeVertex::parse("(2)"), v);
    const BoundaryField<R> faulty = BoundaryField<R>::explicit_field(2, std::move(values));

    const CompatibilityReport rep = check_compatibility(spec, faulty, 2);
    EXPECT_FALSE(rep.residuals.all_exact_zero());
    EXPECT_GT(rep.residuals.nonzero, 0u);
}

TEST(Compatibility, FaultLocalizedToItsLevels) {
    // the (n, n-1) marginal identity involves the field on W_{n-1} and W_n
    // only: a level-1 fault breaks the n=2 check but is invisible to the
    // n=3 check, while a level-2 fault breaks both
    const ModelSpec<R> spec = homogeneous_spec(2, 3, -1, {rat(5)});
    const BoundaryField<R> f = solved_field(spec, 3);
    const auto perturbed = [&](const char* vertex) {
        auto values = std::get<typename BoundaryField<R>::Explicit>(f.rep()).values;
        C0Vector<R> v = values.at(TreeVertex::parse(vertex));
        v.set(1, v[1] + rat(625));
        values.insert_or_assign(TreeVertex::parse(vertex), v);
        return BoundaryField<R>::explicit_field(3, std::move(values));
    };

    const BoundaryField<R> shallow = perturbed("(1)");
    EXPECT_FALSE(check_compatibility(spec, shallow, 2).residuals.all_exact_zero());
    EXPECT_TRUE(check_compatibility(spec, shallow, 3).residuals.all_exact_zero());

    const BoundaryField<R> deep = perturbed("(1,2)");
    EXPECT_FALSE(check_compatibility(spec, deep, 2).residuals.all_exact_zero());
    EXPECT_FALSE(check_compatibility(spec, deep, 3).residuals.all_exact_zero());
}

TEST(Reduction, EmbeddedEqualsNative) {
    // countable model truncated at q_trunc = 4 with lambda vanishing from
    // spin 2 on reduces to the native two-state model
    const ModelSpec<R> spec =
        homogeneous_spec(2, 2, -1, {rat(5), rat(0), rat(0), rat(0)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const ReductionReport rep = q_state_reduction_check(spec, f, 2, 2);
    EXPECT_TRUE(rep.weights_vanish);
    EXPECT_EQ(rep.null_config_failures, 0u);
    EXPECT_EQ(rep.field_nonzero_tail, 0u);
    EXPECT_TRUE(rep.native_mismatch.all_exact_zero());
    EXPECT_TRUE(rep.ok());
    EXPECT_EQ(rep.values_compared, 128u); // 2^7 common configurations
}

TEST(Reduction, SolvedFieldTailIsZero) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5), rat(0), rat(0)});
    const SolveResult<R> res = solve_fixed_point(spec, SolveOptions<R>{});
    ASSERT_TRUE(res.ok());
    const C0Vector<R>& v =
        std::get<typename BoundaryField<R>::TranslationInvariant>(res.field.rep()).value;
    EXPECT_TRUE(v[2].is_exact_zero());
    EXPECT_TRUE(v[3].is_exact_zero());
    EXPECT_FALSE(v[1].is_exact_zero());
}

TEST(Reduction, AllWeightsZeroDegeneratesToOneState) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(0), rat(0)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const FiniteVolumeMeasure<R> mu(spec, raw_of(spec, f, 2), 2);
    const auto sp = mu.space();
    Configuration c = sp.first();
    do {
        const bool all_zero = !c.touches_spin_at_least(1);
        if (all_zero) {
            EXPECT_EQ(mu.value(c), R::one(kRc));
        } else {
            EXPECT_TRUE(mu.value(c).is_exact_zero());
        }
    } while (sp.next(c));
}

TEST(Scan, ThetaOneBoundedByOne) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, 0, {rat(5), rat(25)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const auto rows = boundedness_scan(spec, f, 2);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        ASSERT_TRUE(r.has_norm);
        EXPECT_GE(r.max_norm_exponent, 0) << "norm above 1 at n = " << r.n;
    }
}

TEST(Scan, SingleStateNormIsOne) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {});
    RawField<R> raw;
    raw.depth = 2;
    std::map<TreeVertex, C0Vector<R>> hat;
    for (unsigned level = 1; level <= 2; ++level) {
        for (const auto& x : spec.tree.enumerate_level(level)) {
            hat.emplace(x, C0Vector<R>(kRc, 0));
        }
    }
    const BoundaryField<R> f = BoundaryField<R>::explicit_field(2, std::move(hat));
    const auto rows = boundedness_scan(spec, f, 2);
    for (const auto& r : rows) {
        ASSERT_TRUE(r.has_norm);
        EXPECT_EQ(r.max_norm_exponent, 0); // the unique configuration has mass 1
    }
}

TEST(Scan, DistinguishesGrowthProfiles) {
    // theta = 1 factorizes the measure per site, so a boundary vector whose
    // weighted site sum cancels deeply inflates measure norms level by
    // level, while the solved field stays bounded by 1.
    const ModelSpec<R> spec = homogeneous_spec(2, 2, 0, {rat(5)});
    const auto bounded = boundedness_scan(spec, solved_field(spec, 2), 2);
    for (const auto& r : bounded) EXPECT_GE(r.max_norm_exponent, 0);

    // raw h = (1, -1/5 + 125): sum_j lambda_j h_j = 5^4 while the summands
    // are units, so each boundary site contributes norm p^4
    RawField<R> wild;
    wild.depth = 2;
    for (unsigned level = 1; level <= 2; ++level) {
        for (const auto& x : spec.tree.enumerate_level(level)) {
            wild.values.emplace(x, std::vector<R>{rat(1), rat(-1, 5) + rat(125)});
        }
    }
    const BoundaryField<R> hat = normalize_field(wild, spec.weights);
    const auto growing = boundedness_scan(spec, hat, 2);
    ASSERT_EQ(growing.size(), 2u);
    EXPECT_LT(growing[0].max_norm_exponent, 0);
    EXPECT_LT(growing[1].max_norm_exponent, growing[0].max_norm_exponent)
        << "norm profile did not grow with the volume";
}

TEST(Measure, RootDegreeKPlusOneMode) {
    // same machinery under the k+1 root convention, end to end
    const ModelSpec<R> spec{
        kRc, CayleyTree(2, 2, RootDegreeMode::k_plus_one),
        CouplingAssignment<R>(rat(5), CouplingAssignment<R>::Homogeneous{-1}),
        WeightSequence<R>(kRc, {rat(5)})};
    Sampler s(33);
    std::map<TreeVertex, C0Vector<R>> boundary;
    for (const auto& y : spec.tree.enumerate_level(2)) {
        boundary.emplace(y, s.vector_in_ball<R>(kRc, 1, 1));
    }
    const BoundaryField<R> field = backward_field(spec, 2, boundary);
    EXPECT_TRUE(verify_recurrence(spec, field, 2).all_exact_zero());

    const FiniteVolumeMeasure<R> mu(spec, raw_of(spec, field, 2), 2);
    EXPECT_EQ(mu.site_count(), 1u + 3u + 6u);
    EXPECT_EQ(mu.total_mass(), R::one(kRc));
    const CompatibilityReport rep = check_compatibility(spec, field, 2);
    EXPECT_TRUE(rep.residuals.all_exact_zero());
}

TEST(Additivity, CylindersSumExactly) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5)});
    const BoundaryField<R> f = solved_field(spec, 2);
    const FiniteVolumeMeasure<R> mu(spec, raw_of(spec, f, 2), 2);

    // root-spin cylinders partition the space
    R total = R::zero(kRc);
    for (std::uint8_t s = 0; s < 2; ++s) {
        total = total + mu.cylinder_measure({{0, s}});
    }
    EXPECT_EQ(total, R::one(kRc));

    // random disjoint families: fix the same sites with different values
    Sampler smp(77);
    for (int t = 0; t < 100; ++t) {
        const std::size_t site_a = smp.next(mu.site_count());
        std::size_t site_b = smp.next(mu.site_count());
        if (site_b == site_a) site_b = (site_b + 1) % mu.site_count();
        // cylinders {site_a=0, site_b=v} for v = 0,1 are disjoint; their
        // union is {site_a=0} intersected over site_b's full range
        const R whole = mu.cylinder_measure({{site_a, 0}});
        const R part0 = mu.cylinder_measure({{site_a, 0}, {site_b, 0}});
        const R part1 = mu.cylinder_measure({{site_a, 0}, {site_b, 1}});
        EXPECT_EQ(part0 + part1, whole);
    }
}

TEST(Kinds, AgreementThroughExp) {
    // with H = 0 the Gibbs kind with additive field g equals the quasi
    // kind with multiplicative field exp_p(g), up to the exp working
    // precision
    const long target = 32;
    ModelSpec<R> gibbs = homogeneous_spec(2, 2, 0, {rat(5)}, MeasureKind::gibbs);
    gibbs.exp_target_valuation = target;
    const ModelSpec<R> quasi = homogeneous_spec(2, 2, 0, {rat(5)});

    Sampler s(88);
    RawField<R> gfield, qfield;
    gfield.depth = qfield.depth = 2;
    for (unsigned level = 1; level <= 2; ++level) {
        for (const auto& x : quasi.tree.enumerate_level(level)) {
            std::vector<R> g, q;
            for (unsigned spin = 0; spin < 2; ++spin) {
                const R gv = R::from_mpq(kRc, s.rational_in_ball(5, 1));
                g.push_back(gv);
                q.push_back(exp_p(gv, target));
            }
            gfield.values.emplace(x, std::move(g));
            qfield.values.emplace(x, std::move(q));
        }
    }
    const FiniteVolumeMeasure<R> mg(gibbs, gfield, 2);
    const FiniteVolumeMeasure<R> mq(quasi, qfield, 2);

    const long zv = mg.partition_function().valuation().value();
    const long slack = target - 2 * std::abs(zv) - 2;
    const auto sp = mg.space();
    Configuration c = sp.first();
    do {
        const R diff = mg.value(c) - mq.value(c);
        EXPECT_TRUE(diff.valuation().norm_at_most(slack))
            << "kinds disagree above the working precision";
    } while (sp.next(c));
}

TEST(Kinds, GibbsDomainViolationReported) {
    // N = 1 puts H = 1 outside the exp convergence disk for some config
    ModelSpec<R> gibbs = homogeneous_spec(1, 1, 1, {rat(5)}, MeasureKind::gibbs);
    RawField<R> field;
    field.depth = 1;
    field.values.emplace(TreeVertex::parse("(1)"), std::vector<R>{rat(25), rat(25)});
    EXPECT_THROW((FiniteVolumeMeasure<R>(gibbs, field, 1)), precondition_error);
}

TEST(Measure, DegenerateZeroPartitionFunction) {
    // theta = 1 and sum_j lambda_j h_j = 0 collapses Z to zero
    const ModelSpec<R> spec = homogeneous_spec(1, 1, 0, {rat(5)});
    RawField<R> field;
    field.depth = 1;
    field.values.emplace(TreeVertex::parse("(1)"), std::vector<R>{rat(1), rat(-1, 5)});
    EXPECT_THROW((FiniteVolumeMeasure<R>(spec, field, 1)), precondition_error);
}

TEST(Measure, BudgetEnforced) {
    const ModelSpec<R> spec = homogeneous_spec(2, 2, -1, {rat(5)});
    const BoundaryField<R> f = solved_field(spec, 2);
    EXPECT_THROW((FiniteVolumeMeasure<R>(spec, raw_of(spec, f, 2), 2, 10)), budget_error);
    EXPECT_THROW(check_compatibility(spec, f, 2, 10), budget_error);
}
