#include "aqe/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "aqe/error.hpp"
#include "aqe/hash.hpp"

namespace aqe {

double SampleFamily::group_rate(std::int64_t group, int level) const {
  const std::int64_t f = group_freq[static_cast<std::size_t>(group)];
  const std::int64_t k = cap(level);
  return k >= f ? 1.0 : static_cast<double>(k) / static_cast<double>(f);
}

std::span<const BlockRef> SampleFamily::level_blocks(int level) const {
  const std::int64_t end = level_rows[static_cast<std::size_t>(level)];
  auto it = std::partition_point(blocks.begin(), blocks.end(),
                                 [end](const BlockRef& b) { return b.row_end <= end; });
  return {blocks.data(), static_cast<std::size_t>(it - blocks.begin())};
}

std::string family_name(const std::string& table, const ColumnSet& phi) {
  return table + ":" + phi.to_string();
}

std::vector<std::int64_t> family_caps(std::int64_t base_cap, std::int64_t ratio) {
  if (ratio < 2) throw Error(ErrorKind::kInvalidArgument, "cap ratio must be at least 2");
  if (base_cap < 1) throw Error(ErrorKind::kInvalidArgument, "base cap must be at least 1");
  std::int64_t levels = 0;
  for (std::int64_t p = 1; p <= base_cap / ratio; p *= ratio) ++levels;  // floor(log_c K_0)
  levels = std::max<std::int64_t>(levels, 1);
  std::vector<std::int64_t> caps;
  std::int64_t divisor = 1;
  for (std::int64_t i = 0; i < levels; ++i) {
    caps.push_back(base_cap / divisor);
    divisor *= ratio;
  }
  return caps;
}

UniformSample build_uniform(const TableHandle& table, double probability, std::uint64_t seed) {
  if (!(probability > 0.0 && probability <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "sampling probability must be in (0, 1]");
  }
  UniformSample out;
  out.name = table.name + "@uniform";
  out.table = table.name;
  out.probability = probability;
  out.seed = seed;
  out.population = table.row_count;
  out.rows = Table::sharing_dictionaries(table.data);
  const std::uint64_t stream = splitmix64(seed);
  for (std::size_t r = 0; r < table.data.row_count(); ++r) {
    if (unit_interval(splitmix64(stream + r)) < probability) out.rows.append_row_from(table.data, r);
  }
  out.blocks = partition_blocks(0, static_cast<std::int64_t>(out.rows.row_count()));
  return out;
}

FamilyBuilder::FamilyBuilder(std::shared_ptr<const TableHandle> table, ColumnSet phi,
                             std::int64_t base_cap, std::int64_t ratio, std::uint64_t seed)
    : table_(std::move(table)), indexer_(phi.size()) {
  if (phi.empty()) throw Error(ErrorKind::kInvalidArgument, "family column set is empty");
  family_.caps = family_caps(base_cap, ratio);
  for (const auto& c : phi.columns()) phi_cols_.push_back(table_->data.column_index(c));
  family_.name = family_name(table_->name, phi);
  family_.table = table_->name;
  family_.phi = std::move(phi);
  family_.base_cap = base_cap;
  family_.ratio = ratio;
  family_.seed = seed;
  row_local_group_.reserve(table_->data.row_count());
}

bool FamilyBuilder::step() {
  switch (stage_) {
    case Stage::kGrouping: {
      if (next_block_ < table_->blocks.size()) {
        const BlockRef& b = table_->blocks[next_block_++];
        std::vector<std::int64_t> key(phi_cols_.size());
        for (auto r = static_cast<std::size_t>(b.row_begin); r < static_cast<std::size_t>(b.row_end);
             ++r) {
          for (std::size_t k = 0; k < phi_cols_.size(); ++k) {
            key[k] = table_->data.column(phi_cols_[k]).key_at(r);
          }
          const auto id = indexer_.insert(key);
          if (id == local_freq_.size()) {
            local_freq_.push_back(0);
            local_first_row_.push_back(r);
          }
          ++local_freq_[id];
          row_local_group_.push_back(id);
        }
      }
      if (next_block_ >= table_->blocks.size()) stage_ = Stage::kRanking;
      return true;
    }
    case Stage::kRanking:
      rank_and_materialize();
      stage_ = Stage::kDone;
      return false;
    case Stage::kDone:
      return false;
  }
  return false;
}

void FamilyBuilder::rank_and_materialize() {
  const Table& src = table_->data;
  const std::size_t groups = local_freq_.size();

  std::vector<GroupKey> keys(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t c : phi_cols_) keys[g].push_back(src.value(local_first_row_[g], c));
  }
  std::vector<std::uint32_t> order(groups);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });

  // Rows of each local group, in source order (counting sort).
  std::vector<std::size_t> offset(groups + 1, 0);
  for (std::size_t g = 0; g < groups; ++g) offset[g + 1] = offset[g] + local_freq_[g];
  std::vector<std::size_t> members(row_local_group_.size());
  {
    std::vector<std::size_t> fill(offset.begin(), offset.end() - 1);
    for (std::size_t r = 0; r < row_local_group_.size(); ++r) members[fill[row_local_group_[r]]++] = r;
  }

  // Partial Fisher-Yates per group: after the loop, members[offset + i] is
  // the row with rank i, for i < min(K_0, F).
  const std::int64_t k0 = family_.caps.front();
  std::vector<std::int64_t> kept(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t f = local_freq_[g];
    const auto k = static_cast<std::size_t>(std::min<std::int64_t>(k0, static_cast<std::int64_t>(f)));
    kept[g] = static_cast<std::int64_t>(k);
    std::mt19937_64 rng(splitmix64(family_.seed ^ hash_key(keys[g])));
    std::size_t* base = members.data() + offset[g];
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_below(rng, f - i);
      std::swap(base[i], base[j]);
    }
  }

  family_.group_keys.reserve(groups);
  family_.group_freq.reserve(groups);
  for (std::uint32_t g : order) {
    family_.group_keys.push_back(keys[g]);
    family_.group_freq.push_back(local_freq_[g]);
  }

  const int levels = family_.level_count();
  family_.rows = Table::sharing_dictionaries(src);
  family_.level_rows.assign(static_cast<std::size_t>(levels), 0);
  std::int64_t row_id = 0;
  for (int band = levels - 1; band >= 0; --band) {
    const std::int64_t lo = band + 1 < levels ? family_.cap(band + 1) : 0;
    const std::int64_t hi = family_.cap(band);
    const std::int64_t band_begin = row_id;
    for (std::size_t pos = 0; pos < groups; ++pos) {
      const std::uint32_t g = order[pos];
      const std::int64_t end = std::min(hi, kept[g]);
      for (std::int64_t rank = lo; rank < end; ++rank) {
        family_.rows.append_row_from(src, members[offset[g] + static_cast<std::size_t>(rank)]);
        family_.row_group.push_back(static_cast<std::int64_t>(pos));
        family_.row_rank.push_back(rank);
        ++row_id;
      }
    }
    family_.level_rows[static_cast<std::size_t>(band)] = row_id;
    auto blocks = partition_blocks(band_begin, row_id, static_cast<std::int64_t>(family_.blocks.size()));
    family_.blocks.insert(family_.blocks.end(), blocks.begin(), blocks.end());
  }

  row_local_group_ = {};
  local_freq_ = {};
  local_first_row_ = {};
}

SampleFamily FamilyBuilder::take() {
  while (step()) {
  }
  return std::move(family_);
}

SampleFamily build_family(std::shared_ptr<const TableHandle> table, const ColumnSet& phi,
                          std::int64_t base_cap, std::int64_t ratio, std::uint64_t seed) {
  FamilyBuilder builder(std::move(table), phi, base_cap, ratio, seed);
  return builder.take();
}

LevelView::LevelView(const SampleFamily& family, int level) : family_(&family), level_(level) {
  if (level < 0 || level >= family.level_count()) {
    throw Error(ErrorKind::kInvalidArgument,
                "level " + std::to_string(level) + " out of range for family '" + family.name +
                    "' with " + std::to_string(family.level_count()) + " levels");
  }
  size_ = static_cast<std::size_t>(family.level_rows[static_cast<std::size_t>(level)]);
}

LevelView sample_at_level(const SampleFamily& family, int level) { return {family, level}; }

std::int64_t family_store_cost(const ColumnSetStats& stats, std::int64_t cap) {
  std::int64_t total = 0;
  for (const auto& [key, f] : stats.frequency) total += std::min(cap, f);
  return total;
}

std::shared_ptr<const SampleFamily> refresh_family(Catalog& catalog, const SampleFamily& family,
                                                   std::uint64_t new_seed) {
  RefreshTask task(catalog, family, new_seed);
  task.run_to_completion();
  return catalog.family(family.name);
}

namespace {

std::shared_ptr<const TableHandle> source_table(const Catalog& catalog, const SampleFamily& family) {
  if (!catalog.has_table(family.table)) {
    throw Error(ErrorKind::kNotFound, "source table '" + family.table + "' of family '" +
                                          family.name + "' is missing");
  }
  return catalog.table(family.table);
}

}  // namespace

RefreshTask::RefreshTask(Catalog& catalog, const SampleFamily& family, std::uint64_t new_seed)
    : catalog_(catalog),
      generation_(family.generation + 1),
      builder_(source_table(catalog, family), family.phi, family.base_cap, family.ratio, new_seed) {}

bool RefreshTask::run_quantum() {
  if (finished_) return false;
  if (paused_) return true;
  if (builder_.step()) return true;
  auto fresh = std::make_shared<SampleFamily>(builder_.take());
  fresh->generation = generation_;
  catalog_.put_family(std::move(fresh));
  finished_ = true;
  return false;
}

void RefreshTask::run_to_completion() {
  resume();
  while (run_quantum()) {
  }
}

}  // namespace aqe
