#pragma once

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/influence.hpp"
#include "advinf/perturbation.hpp"
#include "advinf/surrogate.hpp"
#include "advinf/types.hpp"

namespace advinf {

/// Shortest text that round-trips the double.
inline std::string format_double(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::string_view what) {
  T value{};
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty())
    throw ParseError("invalid " + std::string(what) + " '" + std::string(field) + "'", line);
  return value;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

/// CSV of reals, one node per row; every row needs the same column count.
inline Matrix read_feature_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    std::vector<double> row;
    for (auto field : detail::split(text, ',')) row.push_back(detail::parse_number<double>(field, line_no, "feature value"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("expected " + std::to_string(rows.front().size()) + " feature columns, got " +
                           std::to_string(row.size()),
                       line_no);
    rows.push_back(std::move(row));
  }
  Matrix x(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return x;
}

/// "u<TAB>v" per line (any whitespace accepted), '#' starts a comment.
inline std::vector<Edge> read_edge_list(const std::filesystem::path& path, Index num_nodes) {
  auto in = detail::open_in(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    std::istringstream fields{std::string(text)};
    std::string a, b, extra;
    if (!(fields >> a >> b) || (fields >> extra)) throw ParseError("expected two node indices", line_no);
    const auto u = detail::parse_number<Index>(a, line_no, "node index");
    const auto v = detail::parse_number<Index>(b, line_no, "node index");
    if (u >= num_nodes || v >= num_nodes)
      throw IndexError("edge endpoint >= " + std::to_string(num_nodes) + " (line " + std::to_string(line_no) + ")");
    if (u == v) throw ParseError("self-loop", line_no);
    edges.push_back({u, v});
  }
  return edges;
}

/// One integer per line; a blank line marks an unlabeled node.
inline std::vector<int> read_label_file(const std::filesystem::path& path, Index num_nodes) {
  auto in = detail::open_in(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (labels.size() == num_nodes) {
      if (!text.empty()) throw ParseError("more labels than nodes", line_no);
      continue;
    }
    if (text.empty()) {
      labels.push_back(kUnlabeled);
      continue;
    }
    const int y = detail::parse_number<int>(text, line_no, "label");
    if (y < 0) throw LabelError("negative label (line " + std::to_string(line_no) + ")");
    labels.push_back(y);
  }
  labels.resize(num_nodes, kUnlabeled);
  return labels;
}

/// Loads and validates a graph. The feature file fixes N. When `num_labels` is unset, K
/// is one more than the largest label present. An empty label path yields an
/// unlabeled graph.
inline Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                        const std::filesystem::path& label_path, FeatureKind kind,
                        std::optional<int> num_labels = std::nullopt) {
  Matrix x = read_feature_csv(feature_path);
  const auto n = static_cast<Index>(x.rows());
  std::vector<Edge> edges = read_edge_list(edge_path, n);
  std::vector<int> labels;
  int k = num_labels.value_or(0);
  if (!label_path.empty()) {
    labels = read_label_file(label_path, n);
    int max_label = -1;
    for (int y : labels) max_label = std::max(max_label, y);
    if (num_labels) {
      if (max_label >= *num_labels)
        throw LabelError("label " + std::to_string(max_label) + " >= label count " + std::to_string(*num_labels));
    } else {
      k = max_label + 1;
    }
  }
  return Graph(n, std::move(edges), std::move(x), std::move(labels), k, kind);
}

inline void write_graph(const Graph& g, const std::filesystem::path& edge_path,
                        const std::filesystem::path& feature_path, const std::filesystem::path& label_path) {
  {
    auto out = detail::open_out(edge_path);
    out << "# " << g.num_nodes() << " nodes, " << g.edges().size() << " undirected edges\n";
    for (const Edge& e : g.edges()) out << e.u << '\t' << e.v << '\n';
  }
  {
    auto out = detail::open_out(feature_path);
    const Matrix& x = g.features();
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << format_double(x(r, c));
      out << '\n';
    }
  }
  if (g.has_labels()) {
    auto out = detail::open_out(label_path);
    for (int y : g.labels()) {
      if (y != kUnlabeled) out << y;
      out << '\n';
    }
  }
}

/// "node,split" rows with split in {train, val, test}; an optional header is skipped.
inline SplitAssignment read_splits(const std::filesystem::path& path, Index num_nodes) {
  auto in = detail::open_in(path);
  SplitAssignment s;
  std::vector<char> seen(num_nodes, 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#' || text == "node,split") continue;
    const auto fields = detail::split(text, ',');
    if (fields.size() != 2) throw ParseError("expected 'node,split'", line_no);
    const auto node = detail::parse_number<Index>(fields[0], line_no, "node index");
    if (node >= num_nodes) throw IndexError("split node >= " + std::to_string(num_nodes) + " (line " + std::to_string(line_no) + ")");
    if (seen[node]) throw ParseError("node listed twice", line_no);
    seen[node] = 1;
    if (fields[1] == "train") s.train.push_back(node);
    else if (fields[1] == "val") s.validation.push_back(node);
    else if (fields[1] == "test") s.test.push_back(node);
    else throw ParseError("unknown split '" + std::string(fields[1]) + "'", line_no);
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline void write_splits(const SplitAssignment& s, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "node,split\n";
  for (Index i : s.train) out << i << ",train\n";
  for (Index i : s.validation) out << i << ",val\n";
  for (Index i : s.test) out << i << ",test\n";
}

/// Header "D,K,L", then D rows of K weights, then the K-entry bias row.
inline void save_surrogate(const SurrogateModel& m, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << m.weights.rows() << ',' << m.weights.cols() << ',' << m.depth << '\n';
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) out << (c ? "," : "") << format_double(m.weights(r, c));
    out << '\n';
  }
  for (Eigen::Index c = 0; c < m.bias.size(); ++c) out << (c ? "," : "") << format_double(m.bias(c));
  out << '\n';
}

inline SurrogateModel load_surrogate(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty checkpoint", 1);
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() != 3) throw ParseError("checkpoint header must be 'D,K,L'", 1);
  const auto d = detail::parse_number<Index>(header[0], 1, "D");
  const auto k = detail::parse_number<Index>(header[1], 1, "K");
  const auto depth = detail::parse_number<int>(header[2], 1, "L");
  SurrogateModel m;
  m.depth = depth;
  m.weights.resize(d, k);
  m.bias.resize(k);
  m.trained_on = "checkpoint " + path.filename().string();
  auto read_row = [&](auto&& store) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError("checkpoint truncated", line_no);
    const auto fields = detail::split(detail::trim(line), ',');
    if (fields.size() != k) throw ParseError("expected " + std::to_string(k) + " values", line_no);
    for (Index c = 0; c < k; ++c) store(c, detail::parse_number<double>(fields[c], line_no, "weight"));
  };
  for (Index r = 0; r < d; ++r) read_row([&](Index c, double v) { m.weights(r, c) = v; });
  read_row([&](Index c, double v) { m.bias(c) = v; });
  return m;
}

/// Audit rows "node,feature,delta,new_value".
inline void write_perturbations(const std::vector<std::pair<Index, FeaturePerturbation>>& items, const Matrix& x,
                                const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "node,feature,delta,new_value\n";
  for (const auto& [node, eps] : items) {
    for (const auto& e : eps.entries) {
      out << node << ',' << e.feature << ',' << format_double(e.delta) << ','
          << format_double(x(node, e.feature) + e.delta) << '\n';
    }
  }
}

struct PerturbationRecord {
  Index node = 0;
  Index feature = 0;
  double delta = 0.0;
  double new_value = 0.0;
};

inline std::vector<PerturbationRecord> read_perturbations(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<PerturbationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text == "node,feature,delta,new_value") continue;
    const auto f = detail::split(text, ',');
    if (f.size() != 4) throw ParseError("expected 'node,feature,delta,new_value'", line_no);
    out.push_back({detail::parse_number<Index>(f[0], line_no, "node"), detail::parse_number<Index>(f[1], line_no, "feature"),
                   detail::parse_number<double>(f[2], line_no, "delta"),
                   detail::parse_number<double>(f[3], line_no, "new value")});
  }
  return out;
}

struct PlanSummary {
  std::string mode;
  Index node_budget = 0;
  Index feature_budget = 0;
  std::size_t predicted_impact = 0;
  struct Row {
    std::size_t order = 0;
    Index node = 0;
    std::size_t score = 0;
    std::size_t residual = 0;
  };
  std::vector<Row> rows;
};

/// First line "# mode=<m>,B_n=<n>,B_f=<f>,predicted_impact=<p>", then "order,node,score,residual".
inline void write_plan(const AttackPlan& plan, std::string_view mode, Index node_budget, Index feature_budget,
                       const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "# mode=" << mode << ",B_n=" << node_budget << ",B_f=" << feature_budget
      << ",predicted_impact=" << plan.predicted_impact << '\n';
  out << "order,node,score,residual\n";
  for (std::size_t k = 0; k < plan.selected.size(); ++k) {
    const auto& e = plan.selected[k];
    out << k << ',' << e.node << ',' << e.score << ',' << e.affected.size() << '\n';
  }
}

inline PlanSummary read_plan(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  PlanSummary p;
  std::string line;
  std::size_t line_no = 0;
  bool have_summary = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text == "order,node,score,residual") continue;
    if (text.front() == '#') {
      for (auto kv : detail::split(detail::trim(text.substr(1)), ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw ParseError("summary field without '='", line_no);
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        if (key == "mode") p.mode = std::string(value);
        else if (key == "B_n") p.node_budget = detail::parse_number<Index>(value, line_no, "B_n");
        else if (key == "B_f") p.feature_budget = detail::parse_number<Index>(value, line_no, "B_f");
        else if (key == "predicted_impact") p.predicted_impact = detail::parse_number<std::size_t>(value, line_no, "impact");
      }
      have_summary = true;
      continue;
    }
    const auto f = detail::split(text, ',');
    if (f.size() != 4) throw ParseError("expected 'order,node,score,residual'", line_no);
    p.rows.push_back({detail::parse_number<std::size_t>(f[0], line_no, "order"), detail::parse_number<Index>(f[1], line_no, "node"),
                      detail::parse_number<std::size_t>(f[2], line_no, "score"),
                      detail::parse_number<std::size_t>(f[3], line_no, "residual")});
  }
  if (!have_summary) throw ParseError("plan has no summary line", 0);
  return p;
}

}  // namespace advinf
