// Copyright 2026 The hpmrec Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hpmrec/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "hpmrec/binio.hpp"
#include "hpmrec/errors.hpp"
#include "hpmrec/rng.hpp"

namespace hpmrec {
namespace {

constexpr std::uint32_t kFeatureVersion = 1;

std::uint64_t pair_key(std::int32_t u, std::int32_t v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    cols.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cols;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path,
                       std::ios::openmode mode = std::ios::out | std::ios::trunc) {
  std::ofstream out(path, mode);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kId:
      return "id";
    case Modality::kVisual:
      return "visual";
    case Modality::kTextual:
      return "textual";
  }
  return "?";
}

InteractionTable parse_interactions(std::istream& in, const std::string& source) {
  InteractionTable table;
  std::unordered_map<std::string, std::int32_t> users, items;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw ParseError(source, line_no,
                       "expected 2 tab-separated columns, got " + std::to_string(cols.size()));
    }
    auto [uit, unew] = users.try_emplace(cols[0], static_cast<std::int32_t>(users.size()));
    if (unew) table.user_ids.push_back(cols[0]);
    auto [iit, inew] = items.try_emplace(cols[1], static_cast<std::int32_t>(items.size()));
    if (inew) table.item_ids.push_back(cols[1]);
    if (!seen.insert(pair_key(uit->second, iit->second)).second) {
      ++table.duplicates_dropped;
      continue;
    }
    table.pairs.push_back({uit->second, iit->second});
  }
  if (table.pairs.empty()) throw InputError(source + ": no interactions");
  table.num_users = table.user_ids.size();
  table.num_items = table.item_ids.size();
  return table;
}

InteractionTable load_interactions(const std::filesystem::path& path) {
  auto in = open_in(path);
  auto table = parse_interactions(in, path.string());
  if (table.duplicates_dropped > 0) {
    std::cerr << "note: " << path.string() << ": dropped " << table.duplicates_dropped
              << " duplicate interactions\n";
  }
  return table;
}

InteractionTable table_from_pairs(std::size_t num_users, std::size_t num_items,
                                  const std::vector<Interaction>& pairs) {
  InteractionTable table;
  table.num_users = num_users;
  table.num_items = num_items;
  for (std::size_t u = 0; u < num_users; ++u) table.user_ids.push_back(std::to_string(u));
  for (std::size_t v = 0; v < num_items; ++v) table.item_ids.push_back(std::to_string(v));
  std::unordered_set<std::uint64_t> seen;
  for (const auto& p : pairs) {
    if (p.user < 0 || static_cast<std::size_t>(p.user) >= num_users || p.item < 0 ||
        static_cast<std::size_t>(p.item) >= num_items) {
      throw BoundsError("interaction index out of range");
    }
    if (seen.insert(pair_key(p.user, p.item)).second) {
      table.pairs.push_back(p);
    } else {
      ++table.duplicates_dropped;
    }
  }
  return table;
}

InteractionTable kcore_filter(const InteractionTable& table, int k) {
  if (k < 1) throw BoundsError("k-core threshold must be >= 1");
  std::vector<std::size_t> udeg(table.num_users, 0), vdeg(table.num_items, 0);
  for (const auto& p : table.pairs) {
    ++udeg[static_cast<std::size_t>(p.user)];
    ++vdeg[static_cast<std::size_t>(p.item)];
  }
  std::vector<char> alive(table.pairs.size(), 1);
  const auto kk = static_cast<std::size_t>(k);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t e = 0; e < table.pairs.size(); ++e) {
      if (!alive[e]) continue;
      const auto u = static_cast<std::size_t>(table.pairs[e].user);
      const auto v = static_cast<std::size_t>(table.pairs[e].item);
      if (udeg[u] < kk || vdeg[v] < kk) {
        alive[e] = 0;
        --udeg[u];
        --vdeg[v];
        changed = true;
      }
    }
  }

  InteractionTable out;
  out.duplicates_dropped = table.duplicates_dropped;
  std::vector<std::int32_t> umap(table.num_users, -1), vmap(table.num_items, -1);
  for (std::size_t u = 0; u < table.num_users; ++u) {
    if (udeg[u] > 0) {
      umap[u] = static_cast<std::int32_t>(out.user_ids.size());
      out.user_ids.push_back(table.user_ids[u]);
    }
  }
  for (std::size_t v = 0; v < table.num_items; ++v) {
    if (vdeg[v] > 0) {
      vmap[v] = static_cast<std::int32_t>(out.item_ids.size());
      out.item_ids.push_back(table.item_ids[v]);
    }
  }
  for (std::size_t e = 0; e < table.pairs.size(); ++e) {
    if (!alive[e]) continue;
    out.pairs.push_back({umap[static_cast<std::size_t>(table.pairs[e].user)],
                         vmap[static_cast<std::size_t>(table.pairs[e].item)]});
  }
  if (out.pairs.empty()) {
    throw InputError("no interactions survive " + std::to_string(k) + "-core filtering");
  }
  out.num_users = out.user_ids.size();
  out.num_items = out.item_ids.size();
  return out;
}

std::array<std::size_t, 3> per_user_split_sizes(std::size_t degree,
                                                const std::array<double, 3>& ratios) {
  // Offset absorbs representation error, e.g. 0.1 * 30 = 3.0000000000000004.
  const auto take = [degree](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(degree) + 1e-9));
  };
  const std::size_t n_train = std::min(degree, std::max<std::size_t>(1, take(ratios[0])));
  const std::size_t n_valid = std::min(take(ratios[1]), degree - n_train);
  return {n_train, n_valid, degree - n_train - n_valid};
}

SplitDataset split_dataset(const InteractionTable& table, const SplitOptions& options) {
  const double total = options.ratios[0] + options.ratios[1] + options.ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || options.ratios[0] <= 0.0 || options.ratios[1] < 0.0 ||
      options.ratios[2] < 0.0) {
    throw ConfigError("split ratios must be non-negative, sum to 1 and give train a share");
  }
  SplitDataset split;
  split.num_users = table.num_users;
  split.num_items = table.num_items;
  split.seed = options.seed;
  auto rng = make_stream(options.seed, "split");

  if (!options.global) {
    std::vector<std::vector<std::int32_t>> by_user(table.num_users);
    for (const auto& p : table.pairs) by_user[static_cast<std::size_t>(p.user)].push_back(p.item);
    for (std::size_t u = 0; u < table.num_users; ++u) {
      auto& items = by_user[u];
      std::shuffle(items.begin(), items.end(), rng);
      const auto sizes = per_user_split_sizes(items.size(), options.ratios);
      const auto user = static_cast<std::int32_t>(u);
      for (std::size_t i = 0; i < items.size(); ++i) {
        const Interaction pair{user, items[i]};
        if (i < sizes[0]) {
          split.train.push_back(pair);
        } else if (i < sizes[0] + sizes[1]) {
          split.valid.push_back(pair);
        } else {
          split.test.push_back(pair);
        }
      }
    }
    return split;
  }

  std::vector<Interaction> pairs = table.pairs;
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto n = pairs.size();
  const auto n_train = static_cast<std::size_t>(std::floor(options.ratios[0] * n + 1e-9));
  const auto n_valid = static_cast<std::size_t>(std::floor(options.ratios[1] * n + 1e-9));
  std::vector<char> has_train(table.num_users, 0);
  std::vector<int> bucket(n);
  for (std::size_t i = 0; i < n; ++i) {
    bucket[i] = i < n_train ? 0 : (i < n_train + n_valid ? 1 : 2);
    if (bucket[i] == 0) has_train[static_cast<std::size_t>(pairs[i].user)] = 1;
  }
  // Every user keeps at least one training interaction.
  for (std::size_t i = 0; i < n; ++i) {
    auto& flag = has_train[static_cast<std::size_t>(pairs[i].user)];
    if (!flag) {
      bucket[i] = 0;
      flag = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    (bucket[i] == 0 ? split.train : bucket[i] == 1 ? split.valid : split.test).push_back(pairs[i]);
  }
  return split;
}

FeatureMatrix load_features(const std::filesystem::path& path, std::size_t expected_rows,
                            Modality modality) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  binio::Reader r(in, path.string());
  r.expect_magic("HPMF");
  const auto version = r.u32();
  if (version != kFeatureVersion) {
    throw InputError(path.string() + ": unsupported feature version " + std::to_string(version));
  }
  const auto rows = r.u64();
  const auto cols = r.u64();
  if (rows != expected_rows) {
    throw InputError(path.string() + ": feature rows " + std::to_string(rows) +
                     " do not match " + std::to_string(expected_rows) + " items");
  }
  if (rows == 0 || cols == 0) throw InputError(path.string() + ": empty feature matrix");
  FeatureMatrix m;
  m.modality = modality;
  m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      const float v = r.f32();
      if (!std::isfinite(v)) {
        throw InputError(path.string() + ": non-finite value at row " + std::to_string(i) +
                         ", col " + std::to_string(j));
      }
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  if (!r.at_end()) throw InputError(path.string() + ": trailing bytes after payload");
  return m;
}

void save_features(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  if (!matrix.values.allFinite()) throw InputError("refusing to save non-finite features");
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  binio::write_magic(out, "HPMF");
  binio::write_u32(out, kFeatureVersion);
  binio::write_u64(out, matrix.rows());
  binio::write_u64(out, matrix.cols());
  for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) binio::write_f32(out, matrix.values(i, j));
  }
  if (!out) throw InputError("failed writing " + path.string());
}

FeatureMatrix select_rows(const FeatureMatrix& matrix, const std::vector<std::size_t>& rows) {
  FeatureMatrix out;
  out.modality = matrix.modality;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), matrix.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= matrix.rows()) throw BoundsError("select_rows: row " + std::to_string(rows[i]) + " out of range");
    out.values.row(static_cast<Eigen::Index>(i)) =
        matrix.values.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

double sparsity(std::size_t num_users, std::size_t num_items, std::size_t num_pairs) {
  return 1.0 - static_cast<double>(num_pairs) /
                   (static_cast<double>(num_users) * static_cast<double>(num_items));
}

namespace {

void write_pairs(const std::filesystem::path& path, const std::vector<Interaction>& pairs) {
  auto out = open_out(path);
  for (const auto& p : pairs) out << p.user << '\t' << p.item << '\n';
}

void write_ids(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < ids.size(); ++i) out << i << '\t' << ids[i] << '\n';
}

std::vector<std::string> read_ids(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0] != std::to_string(ids.size())) {
      throw ParseError(path.string(), line_no, "expected '<index>\\t<id>' in index order");
    }
    ids.push_back(cols[1]);
  }
  return ids;
}

std::vector<Interaction> read_pairs(const std::filesystem::path& path, std::size_t num_users,
                                    std::size_t num_items) {
  auto in = open_in(path);
  std::vector<Interaction> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    Interaction p;
    try {
      std::size_t pos_u = 0, pos_v = 0;
      if (cols.size() != 2) throw std::invalid_argument("columns");
      p.user = std::stoi(cols[0], &pos_u);
      p.item = std::stoi(cols[1], &pos_v);
      if (pos_u != cols[0].size() || pos_v != cols[1].size()) throw std::invalid_argument("int");
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_no, "expected '<user index>\\t<item index>'");
    }
    if (p.user < 0 || static_cast<std::size_t>(p.user) >= num_users || p.item < 0 ||
        static_cast<std::size_t>(p.item) >= num_items) {
      throw ParseError(path.string(), line_no, "index out of range");
    }
    pairs.push_back(p);
  }
  return pairs;
}

}  // namespace

void write_split(const std::filesystem::path& dir, const InteractionTable& table,
                 const SplitDataset& split, int kcore) {
  std::filesystem::create_directories(dir);
  write_pairs(dir / "train.tsv", split.train);
  write_pairs(dir / "valid.tsv", split.valid);
  write_pairs(dir / "test.tsv", split.test);
  write_ids(dir / "users.tsv", table.user_ids);
  write_ids(dir / "items.tsv", table.item_ids);
  nlohmann::ordered_json summary;
  summary["num_users"] = table.num_users;
  summary["num_items"] = table.num_items;
  summary["num_interactions"] = table.pairs.size();
  summary["num_train"] = split.train.size();
  summary["num_valid"] = split.valid.size();
  summary["num_test"] = split.test.size();
  summary["sparsity"] = sparsity(table.num_users, table.num_items, table.pairs.size());
  summary["seed"] = split.seed;
  summary["kcore"] = kcore;
  summary["duplicates_dropped"] = table.duplicates_dropped;
  auto out = open_out(dir / "summary.json");
  out << summary.dump(2) << '\n';
}

PreparedData read_split(const std::filesystem::path& dir) {
  PreparedData data;
  data.user_ids = read_ids(dir / "users.tsv");
  data.item_ids = read_ids(dir / "items.tsv");
  auto& s = data.split;
  s.num_users = data.user_ids.size();
  s.num_items = data.item_ids.size();
  s.train = read_pairs(dir / "train.tsv", s.num_users, s.num_items);
  s.valid = read_pairs(dir / "valid.tsv", s.num_users, s.num_items);
  s.test = read_pairs(dir / "test.tsv", s.num_users, s.num_items);
  if (s.train.empty()) throw InputError(dir.string() + ": empty training split");
  auto in = open_in(dir / "summary.json");
  try {
    const auto summary = nlohmann::json::parse(in);
    s.seed = summary.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError((dir / "summary.json").string() + ": " + e.what());
  }
  return data;
}

}  // namespace hpmrec
