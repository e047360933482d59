#include "aqe/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "aqe/block_io.hpp"
#include "aqe/error.hpp"
#include "aqe/hash.hpp"
#include "aqe/optimizer.hpp"
#include "aqe/sampling.hpp"
#include "aqe/text_format.hpp"

namespace aqe {

namespace {

namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(ErrorKind::kCorrupt, "bad checksum '" + s + "'");
  return v;
}

std::string encode_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return "i:" + std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return "f:" + format_double(*d);
  return "s:" + percent_encode(std::get<std::string>(v));
}

Value decode_value(const std::string& token) {
  if (token.size() < 2 || token[1] != ':') {
    throw Error(ErrorKind::kCorrupt, "bad value token '" + token + "'");
  }
  const std::string_view body = std::string_view(token).substr(2);
  switch (token[0]) {
    case 'i': return parse_int(body);
    case 'f': return parse_double(body);
    case 's': return percent_decode(body);
  }
  throw Error(ErrorKind::kCorrupt, "bad value token '" + token + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp);
    out << text;
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp);
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path, std::uint64_t checksum, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "missing " + what + " file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), {});
  if (fnv1a(text) != checksum) {
    throw Error(ErrorKind::kCorrupt, "checksum mismatch for " + what + " file " + path.string());
  }
  return text;
}

void write_blocks(std::ostream& os, const std::vector<BlockRef>& blocks) {
  for (const auto& b : blocks) {
    os << "block " << b.block_id << " " << b.row_begin << " " << b.row_end << " "
       << percent_encode(b.path) << " " << hex64(b.checksum) << "\n";
  }
}

std::string format_stats(const ColumnSetStats& s) {
  std::ostringstream os;
  os << "aqe-stats v1\n";
  os << "columns " << percent_encode(s.columns.to_string()) << "\n";
  for (const auto& [key, freq] : s.frequency) {
    os << "key " << freq;
    for (const auto& v : key) os << " " << encode_value(v);
    os << "\n";
  }
  return os.str();
}

std::string format_family_meta(const SampleFamily& f) {
  std::ostringstream os;
  os << "aqe-family-meta v1\n";
  os << "caps";
  for (auto c : f.caps) os << " " << c;
  os << "\nlevel_rows";
  for (auto r : f.level_rows) os << " " << r;
  os << "\n";
  for (std::size_t g = 0; g < f.group_keys.size(); ++g) {
    os << "group " << f.group_freq[g];
    for (const auto& v : f.group_keys[g]) os << " " << encode_value(v);
    os << "\n";
  }
  return os.str();
}

std::vector<std::vector<std::string>> tokenized_lines(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = split_ws(line);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

void expect_header(const std::vector<std::vector<std::string>>& lines, const std::string& magic,
                   const std::string& what) {
  if (lines.empty() || lines[0].size() != 2 || lines[0][0] != magic) {
    throw Error(ErrorKind::kCorrupt, what + ": missing '" + magic + "' header");
  }
  if (lines[0][1] != "v1") {
    throw Error(ErrorKind::kVersionMismatch,
                what + ": unsupported version '" + lines[0][1] + "' (expected v1)");
  }
}

ColumnSetStats parse_stats(const std::string& text) {
  const auto lines = tokenized_lines(text);
  expect_header(lines, "aqe-stats", "stats sidecar");
  ColumnSetStats s;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t[0] == "columns" && t.size() == 2) {
      s.columns = ColumnSet::parse(percent_decode(t[1]));
    } else if (t[0] == "key" && t.size() >= 2) {
      GroupKey key;
      for (std::size_t k = 2; k < t.size(); ++k) key.push_back(decode_value(t[k]));
      s.frequency.emplace(std::move(key), parse_int(t[1]));
    } else {
      throw Error(ErrorKind::kCorrupt, "stats sidecar: unexpected line '" + t[0] + "'");
    }
  }
  return s;
}

void parse_family_meta(const std::string& text, SampleFamily& f) {
  const auto lines = tokenized_lines(text);
  expect_header(lines, "aqe-family-meta", "family sidecar");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t[0] == "caps") {
      for (std::size_t k = 1; k < t.size(); ++k) f.caps.push_back(parse_int(t[k]));
    } else if (t[0] == "level_rows") {
      for (std::size_t k = 1; k < t.size(); ++k) f.level_rows.push_back(parse_int(t[k]));
    } else if (t[0] == "group" && t.size() >= 2) {
      f.group_freq.push_back(parse_int(t[1]));
      GroupKey key;
      for (std::size_t k = 2; k < t.size(); ++k) key.push_back(decode_value(t[k]));
      f.group_keys.push_back(std::move(key));
    } else {
      throw Error(ErrorKind::kCorrupt, "family sidecar: unexpected line '" + t[0] + "'");
    }
  }
}

}  // namespace

void persist_manifest(Catalog& catalog) {
  catalog.write_pending_blocks();
  const fs::path& root = catalog.root();
  std::unique_lock lock(catalog.mutex_);
  std::ostringstream os;
  os << "aqe-manifest v" << kManifestVersion << "\n";

  for (const auto& [name, t] : catalog.tables_) {
    os << "table " << percent_encode(name) << "\n";
    os << "schema " << percent_encode(format_schema(t->schema)) << "\n";
    os << "rows " << t->row_count << "\n";
    write_blocks(os, t->blocks);
    os << "end\n";
  }
  for (const auto& [table, sets] : catalog.stats_) {
    for (const auto& [cols, s] : sets) {
      const std::string rel = "stats/" + safe_path_component(table) + "/" +
                              safe_path_component(cols.to_string()) + ".stats";
      const std::string text = format_stats(*s);
      write_text(root / rel, text);
      os << "stats " << percent_encode(table) << " " << percent_encode(cols.to_string()) << " "
         << percent_encode(rel) << " " << hex64(fnv1a(text)) << "\n";
    }
  }
  for (const auto& [table, u] : catalog.uniforms_) {
    os << "uniform " << percent_encode(u->name) << "\n";
    os << "table " << percent_encode(u->table) << "\n";
    os << "schema " << percent_encode(format_schema(u->rows.schema())) << "\n";
    os << "probability " << format_double(u->probability) << "\n";
    os << "seed " << u->seed << "\n";
    os << "population " << u->population << "\n";
    write_blocks(os, u->blocks);
    os << "end\n";
  }
  for (const auto& [name, f] : catalog.families_) {
    const std::string rel = "families/" + safe_path_component(f->id()) + "/meta";
    const std::string text = format_family_meta(*f);
    write_text(root / rel, text);
    os << "family " << percent_encode(f->name) << "\n";
    os << "table " << percent_encode(f->table) << "\n";
    os << "schema " << percent_encode(format_schema(f->rows.schema())) << "\n";
    os << "phi " << percent_encode(f->phi.to_string()) << "\n";
    os << "base_cap " << f->base_cap << "\n";
    os << "ratio " << f->ratio << "\n";
    os << "seed " << f->seed << "\n";
    os << "generation " << f->generation << "\n";
    os << "meta " << percent_encode(rel) << " " << hex64(fnv1a(text)) << "\n";
    write_blocks(os, f->blocks);
    os << "end\n";
  }
  for (const auto& [table, plan] : catalog.plans_) {
    const std::string rel = "plans/" + safe_path_component(table) + ".plan";
    write_plan(*plan, root / rel);
    os << "plan " << percent_encode(table) << " " << percent_encode(rel) << " "
       << hex64(file_checksum(root / rel)) << "\n";
  }
  write_text(root / kManifestName, os.str());
}

void load_manifest_into(Catalog& catalog) {
  const fs::path& root = catalog.root();
  if (root.empty()) throw Error(ErrorKind::kInvalidArgument, "catalog has no root directory");
  const fs::path path = root / kManifestName;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "missing manifest " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  const auto lines = tokenized_lines(text);
  if (lines.empty() || lines[0].size() != 2 || lines[0][0] != "aqe-manifest") {
    throw Error(ErrorKind::kCorrupt, "manifest: missing 'aqe-manifest' header");
  }
  if (lines[0][1] != "v" + std::to_string(kManifestVersion)) {
    throw Error(ErrorKind::kVersionMismatch,
                "manifest version '" + lines[0][1] + "' is not supported (expected v" +
                    std::to_string(kManifestVersion) + ")");
  }

  std::unique_lock lock(catalog.mutex_);
  if (!catalog.tables_.empty() || !catalog.families_.empty() || !catalog.uniforms_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "manifest can only be loaded into an empty catalog");
  }

  std::size_t i = 1;
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorKind::kCorrupt, "manifest line " + std::to_string(i + 1) + ": " + what);
  };
  auto need = [&](const std::vector<std::string>& t, std::size_t n) {
    if (t.size() != n) throw fail("expected " + std::to_string(n - 1) + " fields after '" + t[0] + "'");
  };
  // Reads "key value" lines and block lines up to "end".
  struct Stanza {
    std::map<std::string, std::vector<std::string>> fields;
    std::vector<BlockRef> blocks;
    const std::string& one(const std::string& key) const {
      auto it = fields.find(key);
      if (it == fields.end() || it->second.empty()) {
        throw Error(ErrorKind::kCorrupt, "manifest: stanza lacks '" + key + "'");
      }
      return it->second.front();
    }
  };
  auto read_stanza = [&]() {
    Stanza s;
    for (++i; i < lines.size(); ++i) {
      const auto& t = lines[i];
      if (t[0] == "end") return s;
      if (t[0] == "block") {
        need(t, 6);
        BlockRef b;
        b.block_id = parse_int(t[1]);
        b.row_begin = parse_int(t[2]);
        b.row_end = parse_int(t[3]);
        b.path = percent_decode(t[4]);
        b.checksum = parse_hex64(t[5]);
        s.blocks.push_back(std::move(b));
      } else {
        s.fields[t[0]] = std::vector<std::string>(t.begin() + 1, t.end());
      }
    }
    throw fail("unterminated stanza");
  };
  auto load_rows = [&](const std::vector<BlockRef>& blocks, Table& rows,
                       const std::vector<std::vector<std::int64_t>*>& extra) {
    for (const auto& b : blocks) {
      read_block(root / b.path, b.checksum, rows, extra);
      if (static_cast<std::int64_t>(rows.row_count()) != b.row_end) {
        throw Error(ErrorKind::kCorrupt, "block " + b.path + " has the wrong row count");
      }
    }
  };

  for (; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t[0] == "table") {
      need(t, 2);
      auto h = std::make_shared<TableHandle>();
      h->name = percent_decode(t[1]);
      const Stanza s = read_stanza();
      h->schema = parse_schema(percent_decode(s.one("schema")));
      h->row_count = parse_int(s.one("rows"));
      h->blocks = s.blocks;
      h->data = Table(h->schema);
      load_rows(h->blocks, h->data, {});
      if (static_cast<std::int64_t>(h->data.row_count()) != h->row_count) {
        throw Error(ErrorKind::kCorrupt, "table '" + h->name + "' row count mismatch");
      }
      catalog.tables_[h->name] = std::move(h);
    } else if (t[0] == "stats") {
      need(t, 5);
      const std::string table = percent_decode(t[1]);
      const ColumnSet cols = ColumnSet::parse(percent_decode(t[2]));
      const std::string rel = percent_decode(t[3]);
      auto s = parse_stats(read_text(root / rel, parse_hex64(t[4]), "stats"));
      catalog.stats_[table][cols] = std::make_shared<const ColumnSetStats>(std::move(s));
    } else if (t[0] == "uniform") {
      need(t, 2);
      auto u = std::make_shared<UniformSample>();
      u->name = percent_decode(t[1]);
      const Stanza s = read_stanza();
      u->table = percent_decode(s.one("table"));
      u->probability = parse_double(s.one("probability"));
      u->seed = parse_uint(s.one("seed"));
      u->population = parse_int(s.one("population"));
      u->blocks = s.blocks;
      u->rows = Table(parse_schema(percent_decode(s.one("schema"))));
      load_rows(u->blocks, u->rows, {});
      catalog.uniforms_[u->table] = std::move(u);
    } else if (t[0] == "family") {
      need(t, 2);
      auto f = std::make_shared<SampleFamily>();
      f->name = percent_decode(t[1]);
      const Stanza s = read_stanza();
      f->table = percent_decode(s.one("table"));
      f->phi = ColumnSet::parse(percent_decode(s.one("phi")));
      f->base_cap = parse_int(s.one("base_cap"));
      f->ratio = parse_int(s.one("ratio"));
      f->seed = parse_uint(s.one("seed"));
      f->generation = parse_uint(s.one("generation"));
      const auto& meta = s.fields.at("meta");
      if (meta.size() != 2) throw fail("family meta needs a path and a checksum");
      parse_family_meta(read_text(root / percent_decode(meta[0]), parse_hex64(meta[1]), "family"),
                        *f);
      f->blocks = s.blocks;
      f->rows = Table(parse_schema(percent_decode(s.one("schema"))));
      load_rows(f->blocks, f->rows, {&f->row_group, &f->row_rank});
      catalog.families_[f->name] = std::move(f);
    } else if (t[0] == "plan") {
      need(t, 4);
      const std::string table = percent_decode(t[1]);
      const fs::path file = root / percent_decode(t[2]);
      if (!fs::exists(file)) throw Error(ErrorKind::kIo, "missing plan file " + file.string());
      if (file_checksum(file) != parse_hex64(t[3])) {
        throw Error(ErrorKind::kCorrupt, "checksum mismatch for plan file " + file.string());
      }
      catalog.plans_[table] = std::make_shared<const SamplePlan>(read_plan(file));
    } else {
      throw fail("unknown stanza '" + t[0] + "'");
    }
  }
}

std::unique_ptr<Catalog> load_manifest(const std::filesystem::path& root) {
  auto catalog = std::make_unique<Catalog>(root);
  load_manifest_into(*catalog);
  return catalog;
}

}  // namespace aqe
