#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"

using namespace advinf;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("advinf_graph_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Graph path3() { return Graph(3, {{0, 1}, {1, 2}}, Matrix::Zero(3, 1)); }

Graph random_graph(std::mt19937_64& rng, Index n, double p, Index d = 3) {
  return Graph(n, oracle::random_edges(rng, n, p), oracle::random_binary(rng, n, d, 0.5));
}

}  // namespace

TEST(Csr, TripletsSumDuplicatesAndSortColumns) {
  auto m = CsrMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 2, 4.0}});
  EXPECT_EQ(m.nonzeros(), 3u);
  EXPECT_DOUBLE_EQ(m.at(1, 2), 5.0);
  EXPECT_DOUBLE_EQ(m.at(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 0.0);
  auto cols = m.row_cols(1);
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_LT(cols[0], cols[1]);
}

TEST(Csr, SparseProductsMatchDense) {
  std::mt19937_64 rng(3);
  Matrix a = oracle::random_uniform(rng, 6, 5, -1, 1);
  Matrix b = oracle::random_uniform(rng, 5, 4, -1, 1);
  for (Index r = 0; r < 6; ++r) a(r, r % 5) = 0.0;
  const auto sa = CsrMatrix::from_dense(a);
  const auto sb = CsrMatrix::from_dense(b);
  EXPECT_LT((multiply(sa, sb).to_dense() - a * b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((multiply(sa, b) - a * b).cwiseAbs().maxCoeff(), 1e-12);
  Matrix c = oracle::random_uniform(rng, 6, 3, -1, 1);
  EXPECT_LT((multiply_transposed(sa, c) - a.transpose() * c).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((multiply_row(sa, 2, b) - a.row(2) * b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Graph, RejectsSelfLoop) { EXPECT_THROW(Graph(2, {{1, 1}}, Matrix::Zero(2, 1)), IndexError); }

TEST(Graph, RejectsEndpointOutOfRange) { EXPECT_THROW(Graph(2, {{0, 2}}, Matrix::Zero(2, 1)), IndexError); }

TEST(Graph, RejectsLabelOutOfRange) {
  EXPECT_THROW(Graph(2, {}, Matrix::Zero(2, 1), {0, 2}, 2), LabelError);
}

TEST(Graph, BinaryKindRejectsFractionalValues) {
  Matrix x = Matrix::Zero(2, 1);
  x(1, 0) = 0.5;
  EXPECT_THROW(Graph(2, {}, x, {}, 0, FeatureKind::kBinary), ContractError);
  EXPECT_NO_THROW(Graph(2, {}, x, {}, 0, FeatureKind::kContinuous));
}

TEST(Graph, ReversedDuplicateEdgesCollapse) {
  Graph g(3, {{0, 1}, {1, 0}, {1, 2}}, Matrix::Zero(3, 1));
  ASSERT_EQ(g.edges().size(), 2u);
  EXPECT_EQ(g.edges()[0], (Edge{0, 1}));
  EXPECT_EQ(g.edges()[1], (Edge{1, 2}));
  EXPECT_EQ(g.degree(1), 2u);
}

TEST(Normalization, IsolatedNodeIsOne) {
  Graph g(1, {}, Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(normalized_adjacency(g).at(0, 0), 1.0);
}

TEST(Normalization, SingleEdgeIsAllHalves) {
  Graph g(2, {{0, 1}}, Matrix::Zero(2, 1));
  const Matrix a = normalized_adjacency(g).to_dense();
  EXPECT_TRUE(a.isApprox(Matrix::Constant(2, 2, 0.5)));
}

TEST(Normalization, PathEntry) {
  EXPECT_NEAR(normalized_adjacency(path3()).at(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
}

TEST(Propagation, DepthZeroRejected) { EXPECT_THROW(propagation_operator(path3(), 0), ConfigError); }

TEST(Propagation, DepthOneEqualsHatA) {
  const auto op = propagation_operator(path3(), 1);
  EXPECT_EQ(op.powered.to_dense(), op.hat_a.to_dense());
}

TEST(Propagation, IsolatedNodeAnyDepth) {
  Graph g(1, {}, Matrix::Zero(1, 1));
  for (int l = 1; l <= 4; ++l) EXPECT_DOUBLE_EQ(propagation_operator(g, l).powered.at(0, 0), 1.0);
}

TEST(Propagation, SingleEdgeSquaredIsItself) {
  Graph g(2, {{0, 1}}, Matrix::Zero(2, 1));
  EXPECT_TRUE(propagation_operator(g, 2).powered.to_dense().isApprox(Matrix::Constant(2, 2, 0.5)));
}

TEST(Receptive, IsolatedNodeHasNone) {
  Graph g(2, {}, Matrix::Zero(2, 1));
  EXPECT_TRUE(receptive_neighbors(propagation_operator(g, 2), 0).empty());
}

TEST(Receptive, PathTwoHops) {
  EXPECT_EQ(receptive_neighbors(propagation_operator(path3(), 2), 0), (NodeSet{1, 2}));
}

TEST(Receptive, StarCenterReachesLeaves) {
  Graph g(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}, Matrix::Zero(6, 1));
  EXPECT_EQ(receptive_neighbors(propagation_operator(g, 2), 0), (NodeSet{1, 2, 3, 4, 5}));
}

TEST(CandidateFilter, RegularGraphKeepsAll) {
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, Matrix::Zero(4, 1));
  EXPECT_EQ(candidate_filter(g, 0.1).size(), 4u);
}

TEST(CandidateFilter, SeventiethPercentileCut) {
  const std::vector<Index> degrees{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_EQ(degree_threshold(degrees, 0.3), 7u);
}

TEST(CandidateFilter, TiesAtThresholdKept) {
  // Star with 4 leaves plus a pendant pair: removing 1 of 7 nodes drops only the center.
  Graph g(7, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {5, 6}}, Matrix::Zero(7, 1));
  EXPECT_EQ(candidate_filter(g, 0.15), (NodeSet{1, 2, 3, 4, 5, 6}));
  // Removing 2 of 7 would need to cut into the degree-1 tie, which is kept whole.
  EXPECT_EQ(candidate_filter(g, 0.3), (NodeSet{1, 2, 3, 4, 5, 6}));
}

TEST(CandidateFilter, FractionZeroKeepsAll) {
  std::mt19937_64 rng(1);
  Graph g = random_graph(rng, 20, 0.3);
  EXPECT_EQ(candidate_filter(g, 0.0).size(), 20u);
}

TEST(CandidateFilter, RejectsFractionOne) { EXPECT_THROW(candidate_filter(path3(), 1.0), ConfigError); }

TEST(Splits, FiveNodesGiveThreeOneOne) {
  Graph g(5, {}, Matrix::Zero(5, 1), {0, 1, 0, 1, 0}, 2);
  const auto s = make_splits(g, 9);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(Splits, CoraSizedPartition) {
  const Index n = 2485;
  std::vector<int> labels(n, 0);
  Graph g(n, {}, Matrix::Zero(n, 1), labels, 1);
  const auto s = make_splits(g, 0);
  EXPECT_EQ(s.train.size(), 1491u);
  EXPECT_EQ(s.validation.size(), 497u);
  EXPECT_EQ(s.test.size(), 497u);
}

TEST(Splits, DeterministicAndDisjointCover) {
  std::vector<int> labels{0, 1, kUnlabeled, 1, 0, 1, 0, 0, 1, kUnlabeled, 1, 0};
  Graph g(12, {}, Matrix::Zero(12, 1), labels, 2);
  const auto a = make_splits(g, 42);
  const auto b = make_splits(g, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  std::set<Index> all;
  for (const auto* part : {&a.train, &a.validation, &a.test})
    for (Index i : *part) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_FALSE(all.count(2));
  EXPECT_FALSE(all.count(9));
}

TEST(Splits, UnlabeledGraphRejected) { EXPECT_THROW(make_splits(path3(), 0), LabelError); }

// Properties over random graphs.

TEST(GraphProperties, SymmetryAndNonNegativity) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    Graph g = random_graph(rng, 5 + rep % 20, 0.2);
    for (int l = 1; l <= 3; ++l) {
      const auto op = propagation_operator(g, l);
      for (const CsrMatrix* m : {&op.hat_a, &op.powered}) {
        for (Index r = 0; r < m->rows(); ++r) {
          auto cols = m->row_cols(r);
          auto vals = m->row_vals(r);
          for (std::size_t k = 0; k < cols.size(); ++k) {
            EXPECT_GE(vals[k], 0.0);
            EXPECT_NEAR(vals[k], m->at(cols[k], r), 1e-9);
          }
        }
      }
    }
  }
}

TEST(GraphProperties, SpectralRadiusAtMostOne) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    Graph g = random_graph(rng, 3 + rep * 2 + (rep % 3), 0.25);
    ASSERT_LE(g.num_nodes(), 50u);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normalized_adjacency(g).to_dense());
    EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-6);
  }
}

TEST(GraphProperties, DenseSparseAgreement) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 25; ++rep) {
    Graph g = random_graph(rng, 2 + rep, 0.2);
    const Matrix dense = oracle::dense_normalized_adjacency(g);
    for (int l = 1; l <= 4; ++l) {
      const auto op = propagation_operator(g, l);
      EXPECT_LT((op.powered.to_dense() - oracle::dense_power(dense, l)).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(GraphProperties, ReceptiveReciprocity) {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    Graph g = random_graph(rng, 15, 0.12);
    const auto op = propagation_operator(g, 2);
    std::vector<std::set<Index>> rec(g.num_nodes());
    for (Index i = 0; i < g.num_nodes(); ++i) {
      const auto r = receptive_neighbors(op, i);
      rec[i] = {r.begin(), r.end()};
      EXPECT_FALSE(rec[i].count(i));
    }
    for (Index i = 0; i < g.num_nodes(); ++i)
      for (Index j : rec[i]) EXPECT_TRUE(rec[j].count(i)) << i << " " << j;
  }
}

TEST(GraphProperties, CandidateFilterMonotone) {
  std::mt19937_64 rng(15);
  for (int rep = 0; rep < 20; ++rep) {
    Graph g = random_graph(rng, 40, 0.1);
    NodeSet prev = candidate_filter(g, 0.0);
    for (double f : {0.05, 0.1, 0.3, 0.5, 0.9}) {
      NodeSet cur = candidate_filter(g, f);
      EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

// File formats.

TEST(LoadGraph, DedupsReversedPairs) {
  const auto dir = temp_dir("dedup");
  write_text(dir / "e.txt", "0\t1\n1\t0\n1\t2\n");
  write_text(dir / "x.csv", "1,0\n0,1\n1,1\n");
  write_text(dir / "y.txt", "0\n1\n0\n");
  const Graph g = load_graph(dir / "e.txt", dir / "x.csv", dir / "y.txt", FeatureKind::kBinary);
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_features(), 2u);
  EXPECT_EQ(g.num_labels(), 2);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
}

TEST(LoadGraph, EmptyEdgeFile) {
  const auto dir = temp_dir("empty");
  write_text(dir / "e.txt", "# no edges\n");
  write_text(dir / "x.csv", "0\n1\n");
  write_text(dir / "y.txt", "0\n\n");
  const Graph g = load_graph(dir / "e.txt", dir / "x.csv", dir / "y.txt", FeatureKind::kBinary);
  EXPECT_TRUE(g.edges().empty());
  EXPECT_EQ(g.labels()[1], kUnlabeled);
}

TEST(LoadGraph, MalformedLineReportsLineNumber) {
  const auto dir = temp_dir("malformed");
  write_text(dir / "e.txt", "0\t1\n1\tx\n");
  write_text(dir / "x.csv", "0\n1\n");
  write_text(dir / "y.txt", "0\n1\n");
  try {
    load_graph(dir / "e.txt", dir / "x.csv", dir / "y.txt", FeatureKind::kBinary);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadGraph, EndpointOutOfRange) {
  const auto dir = temp_dir("range");
  write_text(dir / "e.txt", "0\t5\n");
  write_text(dir / "x.csv", "0\n1\n");
  write_text(dir / "y.txt", "0\n1\n");
  EXPECT_THROW(load_graph(dir / "e.txt", dir / "x.csv", dir / "y.txt", FeatureKind::kBinary), IndexError);
}

TEST(LoadGraph, LabelOutOfRange) {
  const auto dir = temp_dir("label");
  write_text(dir / "e.txt", "");
  write_text(dir / "x.csv", "0\n1\n");
  write_text(dir / "y.txt", "0\n3\n");
  EXPECT_THROW(load_graph(dir / "e.txt", dir / "x.csv", dir / "y.txt", FeatureKind::kBinary, 2), LabelError);
}

TEST(LoadGraph, RoundTrip) {
  std::mt19937_64 rng(5);
  Graph g(8, oracle::random_edges(rng, 8, 0.4), oracle::random_uniform(rng, 8, 3, -2, 2), {0, 1, 2, 0, 1, 2, 0, 1}, 3,
          FeatureKind::kContinuous);
  const auto dir = temp_dir("roundtrip");
  write_graph(g, dir / "e.txt", dir / "x.csv", dir / "y.txt");
  const Graph h = load_graph(dir / "e.txt", dir / "x.csv", dir / "y.txt", FeatureKind::kContinuous);
  EXPECT_EQ(h.edges(), g.edges());
  EXPECT_EQ(h.labels(), g.labels());
  EXPECT_EQ(h.features(), g.features());
}

TEST(SplitFile, RoundTrip) {
  std::vector<int> labels(10, 0);
  Graph g(10, {}, Matrix::Zero(10, 1), labels, 1);
  const auto s = make_splits(g, 3);
  const auto dir = temp_dir("splits");
  write_splits(s, dir / "s.csv");
  const auto r = read_splits(dir / "s.csv", 10);
  EXPECT_EQ(r.train, s.train);
  EXPECT_EQ(r.validation, s.validation);
  EXPECT_EQ(r.test, s.test);
}

TEST(Rng, DerivedSeedsDifferByPurposeAndCounter) {
  EXPECT_NE(derive_seed(1, 0, "split"), derive_seed(1, 0, "victim"));
  EXPECT_NE(derive_seed(1, 0, "split"), derive_seed(1, 1, "split"));
  EXPECT_EQ(derive_seed(7, 3, "x"), derive_seed(7, 3, "x"));
  Rng a(5), b(5);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.below(1000), b.below(1000));
}
