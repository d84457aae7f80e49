#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace advinf;

namespace {

SurrogateModel model_from(Matrix w, Vector b) {
  SurrogateModel m;
  m.weights = std::move(w);
  m.bias = std::move(b);
  return m;
}

PerturbationDomain binary_domain(Index dim, Index budget) { return PerturbationDomain::uniform(dim, 0.0, 1.0, budget); }

PairwiseSolution solution(std::vector<PerturbationEntry> entries, int target = 1) {
  PairwiseSolution s;
  s.target_label = target;
  s.flips = true;
  s.perturbation.entries = std::move(entries);
  return s;
}

std::vector<Index> features_of(const FeaturePerturbation& p) {
  std::vector<Index> out;
  for (const auto& e : p.entries) out.push_back(e.feature);
  return out;
}

}  // namespace

TEST(Budget, FloorWithMinimumOne) {
  EXPECT_EQ(feature_budget_from_fraction(0.02, 1433), 28u);
  EXPECT_EQ(feature_budget_from_fraction(0.1, 32), 3u);
  EXPECT_EQ(feature_budget_from_fraction(0.01, 10), 1u);
  EXPECT_THROW(feature_budget_from_fraction(0.0, 10), ConfigError);
}

TEST(MarginCoefficients, ZeroAlphaGivesZero) {
  const auto m = model_from(Matrix::Ones(3, 2), Vector::Zero(2));
  EXPECT_TRUE(margin_coefficients(m, 0.0, 1, 0).isZero());
}

TEST(MarginCoefficients, HandExample) {
  Matrix w(1, 2);
  w << 1.0, 3.0;
  const auto omega = margin_coefficients(model_from(w, Vector::Zero(2)), 0.5, 1, 0);
  EXPECT_DOUBLE_EQ(omega(0), 1.0);
}

TEST(MarginCoefficients, IdenticalColumnsGiveZero) {
  Matrix w(2, 3);
  w << 1, 1, 5, 2, 2, 7;
  EXPECT_TRUE(margin_coefficients(model_from(w, Vector::Zero(3)), 0.7, 0, 1).isZero());
}

TEST(MarginCoefficients, SameLabelRejected) {
  EXPECT_THROW(margin_coefficients(model_from(Matrix::Ones(1, 2), Vector::Zero(2)), 1.0, 1, 1), std::invalid_argument);
}

TEST(BoxLp, ZeroOmegaGivesZeroGains) {
  const auto lp = solve_box_lp(Vector::Zero(3), Eigen::RowVectorXd::Zero(3), binary_domain(3, 1));
  EXPECT_TRUE(lp.gains.isZero());
}

TEST(BoxLp, NoHeadroomAtUpperBound) {
  Vector omega(1);
  omega << 2.0;
  const auto lp = solve_box_lp(omega, Eigen::RowVectorXd::Ones(1), binary_domain(1, 1));
  EXPECT_EQ(lp.eps(0), 0.0);
  EXPECT_EQ(lp.gains(0), 0.0);
}

TEST(BoxLp, HandExample) {
  Vector omega(2);
  omega << 2.0, -1.0;
  Eigen::RowVectorXd x(2);
  x << 0.0, 1.0;
  const auto lp = solve_box_lp(omega, x, binary_domain(2, 2));
  EXPECT_EQ(lp.eps(0), 1.0);
  EXPECT_EQ(lp.eps(1), -1.0);
  EXPECT_EQ(lp.gains(0), 2.0);
  EXPECT_EQ(lp.gains(1), 1.0);
}

TEST(RestrictTopk, NonPositiveGainsGiveEmpty) {
  BoxLpSolution lp{Vector::Zero(3), Vector::Zero(3)};
  lp.gains << 0.0, -1.0, 0.0;
  EXPECT_TRUE(restrict_topk(lp, binary_domain(3, 2)).empty());
}

TEST(RestrictTopk, KeepsAllWhenBudgetSuffices) {
  BoxLpSolution lp{Vector::Ones(3), Vector::Zero(3)};
  lp.gains << 1.0, -1.0, 2.0;
  EXPECT_EQ(features_of(restrict_topk(lp, binary_domain(3, 3))), (std::vector<Index>{0, 2}));
}

TEST(RestrictTopk, TopTwoByGain) {
  BoxLpSolution lp{Vector::Ones(3), Vector::Zero(3)};
  lp.gains << 5.0, 3.0, 4.0;
  EXPECT_EQ(features_of(restrict_topk(lp, binary_domain(3, 2))), (std::vector<Index>{0, 2}));
}

TEST(RestrictTopk, TiesGoToLowerIndex) {
  BoxLpSolution lp{Vector::Ones(4), Vector::Zero(4)};
  lp.gains << 1.0, 2.0, 1.0, 1.0;
  EXPECT_EQ(features_of(restrict_topk(lp, binary_domain(4, 2))), (std::vector<Index>{0, 1}));
}

TEST(PairPerturbation, ZeroWeightsGiveNone) {
  Graph g(2, {{0, 1}}, Matrix::Zero(2, 3));
  const auto op = propagation_operator(g, 2);
  const auto m = model_from(Matrix::Zero(3, 2), Vector::Zero(2));
  const std::vector<int> targets{0, 1};
  EXPECT_FALSE(optimal_pair_perturbation(m, op, g.features(), 0, 1, targets, binary_domain(3, 1)));
}

TEST(PairPerturbation, ZeroAlphaGivesNone) {
  Graph g(3, {{0, 1}}, Matrix::Zero(3, 2));
  const auto op = propagation_operator(g, 2);
  const auto m = model_from(Matrix::Ones(2, 2), Vector::Zero(2));
  const std::vector<int> targets{0, 1};
  EXPECT_FALSE(optimal_pair_perturbation(m, op, g.features(), 0, 2, targets, binary_domain(2, 1)));
}

TEST(PairPerturbation, CraftedSingleFlipMatchesEnumeration) {
  // Two nodes, one edge: alpha = 1/2 everywhere. Node 1 sits at label 0 by a margin of
  // 0.3; switching on feature 1 of node 0 adds 0.5 * 1.0 to label 1 and crosses over,
  // feature 0 only adds 0.1.
  Matrix x = Matrix::Zero(2, 3);
  Matrix w(3, 2);
  w << 0.0, 0.2, 0.0, 1.0, 0.0, -1.0;
  Vector b(2);
  b << 0.3, 0.0;
  Graph g(2, {{0, 1}}, x);
  const auto op = propagation_operator(g, 2);
  const auto m = model_from(w, b);
  const std::vector<int> targets{0, 1};
  const auto dom = binary_domain(3, 1);
  const auto sol = optimal_pair_perturbation(m, op, x, 0, 1, targets, dom);
  ASSERT_TRUE(sol);
  EXPECT_TRUE(sol->flips);
  EXPECT_EQ(sol->target_label, 1);
  EXPECT_EQ(features_of(sol->perturbation), (std::vector<Index>{1}));
  // Exhaustive: exactly the single flips that cross the boundary.
  std::vector<Index> flipping;
  for (Index d = 0; d < 3; ++d) {
    Matrix xp = x;
    xp(0, d) = 1.0;
    const Eigen::RowVectorXd z = (oracle::dense_power(oracle::dense_normalized_adjacency(g), 2).row(1) * xp) * w + b.transpose();
    if (oracle::argmax_lowest(z) == 1) flipping.push_back(d);
  }
  EXPECT_EQ(flipping, (std::vector<Index>{1}));
}

TEST(PairPerturbation, ThirdLabelOvertakingIsRejected) {
  // Raising the margin of label 1 over label 0 also lifts label 2 past both.
  Matrix x = Matrix::Zero(2, 1);
  Matrix w(1, 3);
  w << 0.0, 2.0, 4.0;
  Vector b(3);
  b << 0.5, 0.0, -0.5;
  Graph g(2, {{0, 1}}, x);
  const auto op = propagation_operator(g, 2);
  const auto m = model_from(w, b);
  const std::vector<int> only_one{1};
  EXPECT_FALSE(optimal_pair_perturbation(m, op, x, 0, 1, only_one, binary_domain(1, 1)));
  const std::vector<int> all{0, 1, 2};
  const auto sol = optimal_pair_perturbation(m, op, x, 0, 1, all, binary_domain(1, 1));
  ASSERT_TRUE(sol);
  EXPECT_EQ(sol->target_label, 2);
}

TEST(Aggregate, EmptyGivesEmpty) {
  EXPECT_TRUE(aggregate_final_perturbation({}, binary_domain(3, 2), Eigen::RowVectorXd::Zero(3)).empty());
}

TEST(Aggregate, SingleSolutionTruncatedToBudget) {
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(4);
  std::vector<PairwiseSolution> s{solution({{0, 1, Snap::kUpper, 0.5}, {2, 1, Snap::kUpper, 0.9}, {3, 1, Snap::kUpper, 0.1}})};
  const auto p = aggregate_final_perturbation(s, binary_domain(4, 2), x);
  EXPECT_EQ(features_of(p), (std::vector<Index>{0, 2}));
  const auto all = aggregate_final_perturbation(s, binary_domain(4, 3), x);
  EXPECT_EQ(features_of(all), (std::vector<Index>{0, 2, 3}));
}

TEST(Aggregate, UnanimousFeatureToUpperBound) {
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(8);
  x(7) = 0.25;
  const auto dom = PerturbationDomain::uniform(8, 0.0, 2.0, 1);
  std::vector<PairwiseSolution> s(3, solution({{7, 1.75, Snap::kUpper, 1.0}}));
  const auto p = aggregate_final_perturbation(s, dom, x);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.entries[0].feature, 7u);
  EXPECT_EQ(p.entries[0].delta, 1.75);
}

TEST(Aggregate, FrequencyTieBrokenByGainSum) {
  // {1 up, 2 up}, {1 up}, {2 down}: both features appear twice, feature 1 carries more gain.
  Eigen::RowVectorXd x(3);
  x << 0.0, 0.0, 1.0;
  std::vector<PairwiseSolution> s{solution({{1, 1.0, Snap::kUpper, 0.6}, {2, 0.0, Snap::kUpper, 0.1}}),
                                  solution({{1, 1.0, Snap::kUpper, 0.5}}),
                                  solution({{2, -1.0, Snap::kLower, 0.2}})};
  const auto one = aggregate_final_perturbation(s, binary_domain(3, 1), x);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.entries[0].feature, 1u);
  EXPECT_EQ(one.entries[0].snap, Snap::kUpper);
  EXPECT_EQ(one.entries[0].delta, 1.0);

  // Feature 2 splits one up, one down; the larger down gain decides.
  const auto two = aggregate_final_perturbation(s, binary_domain(3, 2), x);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two.entries[1].feature, 2u);
  EXPECT_EQ(two.entries[1].snap, Snap::kLower);
  EXPECT_EQ(two.entries[1].delta, -1.0);
}

TEST(Aggregate, DirectionTieGoesUp) {
  Eigen::RowVectorXd x(1);
  x << 0.5;
  const auto dom = PerturbationDomain::uniform(1, 0.0, 1.0, 1);
  std::vector<PairwiseSolution> s{solution({{0, 0.5, Snap::kUpper, 1.0}}), solution({{0, -0.5, Snap::kLower, 1.0}})};
  const auto p = aggregate_final_perturbation(s, dom, x);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.entries[0].snap, Snap::kUpper);
}

TEST(Apply, EmptyLeavesMatrixUnchanged) {
  Matrix x = Matrix::Ones(3, 2);
  EXPECT_EQ(apply_perturbation(x, 1, {}, binary_domain(2, 1), FeatureKind::kBinary), x);
}

TEST(Apply, BinaryFlipAndOtherRowsUntouched) {
  std::mt19937_64 rng(1);
  Matrix x = oracle::random_binary(rng, 4, 3, 0.5);
  x(2, 1) = 0.0;
  FeaturePerturbation eps;
  eps.entries.push_back({1, 1.0, Snap::kUpper, 0.0});
  const Matrix y = apply_perturbation(x, 2, eps, binary_domain(3, 1), FeatureKind::kBinary);
  EXPECT_EQ(y(2, 1), 1.0);
  for (Index r : {0u, 1u, 3u}) EXPECT_EQ(y.row(r), x.row(r));
}

TEST(Apply, ExceedingBoundIsRejected) {
  Matrix x = Matrix::Ones(1, 1);
  FeaturePerturbation eps;
  eps.entries.push_back({0, 1.0, Snap::kUpper, 0.0});
  EXPECT_THROW(apply_perturbation(x, 0, eps, binary_domain(1, 1), FeatureKind::kBinary), InvariantViolation);
}

TEST(Apply, OverBudgetIsRejected) {
  Matrix x = Matrix::Zero(1, 2);
  FeaturePerturbation eps;
  eps.entries = {{0, 1.0, Snap::kUpper, 0.0}, {1, 1.0, Snap::kUpper, 0.0}};
  EXPECT_THROW(apply_perturbation(x, 0, eps, binary_domain(2, 1), FeatureKind::kBinary), InvariantViolation);
}

TEST(Apply, NonBinaryResultRejected) {
  Matrix x = Matrix::Zero(1, 1);
  FeaturePerturbation eps;
  eps.entries.push_back({0, 0.5, Snap::kUpper, 0.0});
  EXPECT_THROW(apply_perturbation(x, 0, eps, binary_domain(1, 1), FeatureKind::kBinary), InvariantViolation);
}

TEST(Template, SnapsPerNodeAndSkipsNoops) {
  PerturbationTemplate t{{{0, Snap::kUpper}, {1, Snap::kLower}}};
  Eigen::RowVectorXd x(2);
  x << 1.0, 1.0;
  const auto p = t.instantiate(x, binary_domain(2, 2));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.entries[0].feature, 1u);
  EXPECT_EQ(p.entries[0].delta, -1.0);
}

// Properties.

TEST(PerturbProperties, LpMatchesEnumeration) {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 300; ++rep) {
    const auto inst = oracle::random_lp_instance(rng);
    EXPECT_EQ(oracle::check_lp_instance(inst), "") << "instance " << rep;
  }
}

TEST(PerturbProperties, ObjectiveMonotoneInBudget) {
  std::mt19937_64 rng(102);
  for (int rep = 0; rep < 100; ++rep) {
    auto inst = oracle::random_lp_instance(rng);
    double prev = -1.0;
    for (Index b = 1; b <= static_cast<Index>(inst.omega.size()) + 1; ++b) {
      inst.dom.feature_budget = b;
      double obj = 0.0;
      for (const auto& e : restrict_topk(solve_box_lp(inst.omega, inst.x, inst.dom), inst.dom).entries) obj += e.gain;
      EXPECT_GE(obj, prev);
      prev = obj;
    }
  }
}

TEST(PerturbProperties, OutputsRespectBudgetBoundsAndBinary) {
  std::mt19937_64 rng(103);
  for (int rep = 0; rep < 40; ++rep) {
    const auto inst = oracle::random_influence_instance(rng);
    const auto op = propagation_operator(inst.graph, 2);
    const AttackContext ctx(inst.model, op, inst.graph.features(), inst.dom);
    std::vector<PairwiseSolution> audit;
    const auto candidates = candidate_filter(inst.graph, 0.0);
    const auto scores = score_candidates(candidates, inst.mode, ctx, 1, &audit);
    auto check = [&](Index node, const FeaturePerturbation& p) {
      EXPECT_NO_THROW(validate_perturbation(inst.graph.features().row(node), p, inst.dom, inst.graph.feature_kind()));
      EXPECT_LE(p.size(), inst.dom.feature_budget);
      const Matrix applied = apply_perturbation(inst.graph.features(), node, p, inst.dom, inst.graph.feature_kind());
      for (const auto& e : p.entries) {
        const double v = applied(node, e.feature);
        EXPECT_GE(v, inst.dom.lb(e.feature));
        EXPECT_LE(v, inst.dom.ub(e.feature));
        if (inst.graph.feature_kind() == FeatureKind::kBinary) EXPECT_TRUE(v == 0.0 || v == 1.0);
      }
    };
    for (const auto& s : audit) check(s.candidate, s.perturbation);
    for (const auto& s : scores) check(s.candidate, s.final_perturbation);
  }
}

TEST(PerturbProperties, FlipSoundness) {
  std::mt19937_64 rng(104);
  std::size_t total = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto inst = oracle::random_influence_instance(rng);
    const auto op = propagation_operator(inst.graph, 2);
    const AttackContext ctx(inst.model, op, inst.graph.features(), inst.dom);
    std::vector<PairwiseSolution> audit;
    score_candidates(candidate_filter(inst.graph, 0.0), inst.mode, ctx, 1, &audit);
    total += audit.size();
    for (const auto& s : audit) {
      ASSERT_TRUE(s.flips);
      const Vector z = perturbed_logits(inst.model, op, inst.graph.features(), s.candidate, s.perturbation, s.neighbor);
      EXPECT_EQ(argmax_lowest(z), s.target_label);
    }
    EXPECT_EQ(oracle::count_flip_violations(inst.graph, inst.model, audit), 0u);
  }
  EXPECT_GT(total, 0u);
}
