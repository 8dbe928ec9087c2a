#include "psvm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psvm/errors.hpp"

namespace psvm {

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = n;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  std::uint64_t x = engine_();
  while (x > limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  // splitmix64 finalizer applied per tag
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t s = mix(master);
  for (auto t : tags) s = mix(s ^ mix(t + 0x632BE59BD9B4E019ULL));
  return s;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(indices[r]));
  }
  if (labels) {
    std::vector<int> l;
    l.reserve(indices.size());
    for (auto i : indices) l.push_back((*labels)[i]);
    out.labels = std::move(l);
  }
  return out;
}

void Dataset::validate() const {
  if (!labels) return;
  if (labels->size() != size()) throw ConfigError("label count does not match instance count");
  for (int y : *labels) {
    if (y != 1 && y != -1) throw ConfigError("labels must be -1 or +1");
  }
}

int LabelMapping::map(double raw) const {
  if (kind == Kind::positive_value) return raw == positive ? 1 : -1;
  return raw > 0 ? 1 : -1;
}

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

RawDataset parse_sparse_raw(std::istream& in) {
  struct Row {
    double label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    auto toks = split_ws(view);
    if (toks.empty()) continue;

    Row row;
    if (!parse_double(toks[0], row.label)) throw ParseError(line_no, "bad label '" + std::string(toks[0]) + "'");
    std::size_t last = 0;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      auto colon = toks[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(toks[t]) + "'");
      }
      auto idx_tok = toks[t].substr(0, colon);
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
      if (ec != std::errc() || ptr != idx_tok.data() + idx_tok.size() || idx == 0) {
        throw ParseError(line_no, "bad feature index '" + std::string(idx_tok) + "'");
      }
      if (idx <= last) throw ParseError(line_no, "feature indices must be strictly increasing");
      double value = 0.0;
      if (!parse_double(toks[t].substr(colon + 1), value)) {
        throw ParseError(line_no, "bad feature value in '" + std::string(toks[t]) + "'");
      }
      row.entries.emplace_back(idx, value);
      last = idx;
    }
    dim = std::max(dim, last);
    rows.push_back(std::move(row));
  }

  RawDataset out;
  out.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (auto [idx, v] : rows[r].entries) {
      out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx - 1)) = v;
    }
    out.labels.push_back(rows[r].label);
  }
  return out;
}

RawDataset parse_sparse_raw(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_sparse_raw(in);
}

namespace {

Dataset binarize(RawDataset raw, LabelMapping mapping) {
  Dataset d;
  d.features = std::move(raw.features);
  std::vector<int> labels;
  labels.reserve(raw.labels.size());
  for (double l : raw.labels) labels.push_back(mapping.map(l));
  d.labels = std::move(labels);
  return d;
}

}  // namespace

Dataset parse_sparse_dataset(std::istream& in, LabelMapping mapping) {
  return binarize(parse_sparse_raw(in), mapping);
}

Dataset parse_sparse_dataset(std::string_view text, LabelMapping mapping) {
  return binarize(parse_sparse_raw(text), mapping);
}

Dataset load_sparse_dataset(const std::string& path, LabelMapping mapping) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  Dataset d = parse_sparse_dataset(in, mapping);
  d.name = path;
  return d;
}

Dataset scale_attributes(const Dataset& d) {
  Dataset out = d;
  if (d.size() == 0) return out;
  for (Eigen::Index j = 0; j < d.features.cols(); ++j) {
    const double lo = d.features.col(j).minCoeff();
    const double hi = d.features.col(j).maxCoeff();
    if (hi == lo) {
      out.features.col(j).setZero();
      continue;
    }
    for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
      const double v = d.features(i, j);
      // Pin the endpoints so min/max land exactly on -1/+1.
      if (v == lo) out.features(i, j) = -1.0;
      else if (v == hi) out.features(i, j) = 1.0;
      else out.features(i, j) = std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0);
    }
  }
  return out;
}

std::size_t BagPartition::num_instances() const {
  std::size_t n = 0;
  for (const auto& b : bags) n += b.size();
  return n;
}

std::vector<std::size_t> BagPartition::bag_sizes() const {
  std::vector<std::size_t> out;
  out.reserve(bags.size());
  for (const auto& b : bags) out.push_back(b.size());
  return out;
}

void BagPartition::validate(std::size_t n) const {
  if (proportions.size() != bags.size()) throw ConfigError("one proportion per bag is required");
  std::vector<char> seen(n, 0);
  std::size_t count = 0;
  for (std::size_t k = 0; k < bags.size(); ++k) {
    if (bags[k].empty()) throw ConfigError("bag " + std::to_string(k) + " is empty");
    if (!(proportions[k] >= 0.0 && proportions[k] <= 1.0)) {
      throw ConfigError("proportion of bag " + std::to_string(k) + " is outside [0,1]");
    }
    for (auto i : bags[k]) {
      if (i >= n) throw ConfigError("bag index " + std::to_string(i) + " out of range");
      if (seen[i]) throw ConfigError("instance " + std::to_string(i) + " appears in more than one bag");
      seen[i] = 1;
      ++count;
    }
  }
  if (count != n) throw ConfigError("bags do not cover every instance");
}

BagPartition BagPartition::select(std::span<const std::size_t> bag_ids,
                                  std::vector<std::size_t>& instances) const {
  BagPartition out;
  instances.clear();
  for (auto k : bag_ids) {
    std::vector<std::size_t> bag;
    bag.reserve(bags.at(k).size());
    for (auto i : bags[k]) {
      bag.push_back(instances.size());
      instances.push_back(i);
    }
    out.bags.push_back(std::move(bag));
    out.proportions.push_back(proportions.at(k));
  }
  return out;
}

std::string BagPartition::to_json() const {
  nlohmann::json j;
  j["bags"] = bags;
  j["proportions"] = proportions;
  return j.dump();
}

BagPartition BagPartition::from_json(std::string_view text) {
  BagPartition p;
  try {
    auto j = nlohmann::json::parse(text);
    p.bags = j.at("bags").get<std::vector<std::vector<std::size_t>>>();
    p.proportions = j.at("proportions").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad bag partition JSON: ") + e.what());
  }
  if (p.bags.size() != p.proportions.size()) throw ConfigError("bags and proportions differ in length");
  return p;
}

std::vector<double> compute_proportions(std::span<const int> labels, const BagPartition& part) {
  std::vector<double> out;
  out.reserve(part.bags.size());
  for (const auto& bag : part.bags) {
    std::size_t pos = 0;
    for (auto i : bag) pos += labels[i] == 1 ? 1 : 0;
    out.push_back(bag.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(bag.size()));
  }
  return out;
}

double bag_error(std::span<const int> predicted, const BagPartition& part) {
  const auto p = compute_proportions(predicted, part);
  double err = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) err += std::abs(p[k] - part.proportions[k]);
  return err;
}

BagPartition generate_bags(const Dataset& d, std::size_t bag_size, Rng& rng) {
  if (!d.labels) throw ConfigError("bag generation needs ground-truth labels");
  if (bag_size == 0) throw ConfigError("bag size must be at least 1");
  const std::size_t n = d.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(std::span<std::size_t>(perm));

  BagPartition part;
  for (std::size_t start = 0; start < n; start += bag_size) {
    const std::size_t end = std::min(n, start + bag_size);
    part.bags.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                           perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  part.proportions = compute_proportions(*d.labels, part);
  return part;
}

std::vector<FoldSplit> kfold_over_bags(const BagPartition& part, std::size_t k, Rng& rng) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  const std::size_t nb = part.num_bags();
  if (nb < k) {
    throw ConfigError("cannot split " + std::to_string(nb) + " bags into " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(nb);
  for (std::size_t i = 0; i < nb; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<FoldSplit> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t take = nb / k + (f < nb % k ? 1 : 0);
    folds[f].fold_index = f;
    folds[f].test_bag_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                 order.begin() + static_cast<std::ptrdiff_t>(pos + take));
    std::sort(folds[f].test_bag_ids.begin(), folds[f].test_bag_ids.end());
    pos += take;
  }
  for (auto& fold : folds) {
    std::vector<char> is_test(nb, 0);
    for (auto b : fold.test_bag_ids) is_test[b] = 1;
    for (std::size_t b = 0; b < nb; ++b) {
      if (!is_test[b]) fold.train_bag_ids.push_back(b);
    }
  }
  return folds;
}

Dataset one_vs_rest(const RawDataset& raw, double positive, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < raw.labels.size(); ++i) {
    (raw.labels[i] == positive ? pos : neg).push_back(i);
  }
  rng.shuffle(std::span<std::size_t>(neg));
  neg.resize(std::min(neg.size(), pos.size()));

  std::vector<std::size_t> keep = pos;
  keep.insert(keep.end(), neg.begin(), neg.end());
  std::sort(keep.begin(), keep.end());

  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(keep.size()), raw.features.cols());
  std::vector<int> labels;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    d.features.row(static_cast<Eigen::Index>(r)) = raw.features.row(static_cast<Eigen::Index>(keep[r]));
    labels.push_back(raw.labels[keep[r]] == positive ? 1 : -1);
  }
  d.labels = std::move(labels);
  return d;
}

Dataset subsample(const Dataset& d, std::size_t max_points, Rng& rng) {
  if (d.size() <= max_points) return d;
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  return d.subset(idx);
}

}  // namespace psvm
