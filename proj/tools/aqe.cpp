// Command-line front end: ingest, profile, plan, build, query, repl, stats,
// refresh, zipf.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aqe/catalog.hpp"
#include "aqe/engine.hpp"
#include "aqe/error.hpp"
#include "aqe/manifest.hpp"
#include "aqe/optimizer.hpp"
#include "aqe/query.hpp"
#include "aqe/sampling.hpp"
#include "aqe/text_format.hpp"

namespace fs = std::filesystem;

namespace {

std::uint64_t env_seed() {
  const char* s = std::getenv("AQE_SEED");
  return s ? aqe::parse_uint(s) : 42;
}

double env_confidence() {
  const char* s = std::getenv("AQE_CONFIDENCE");
  if (!s) return 0.95;
  double c = aqe::parse_double(s);
  if (c > 1.0) c /= 100.0;
  if (!(c > 0.0 && c < 1.0)) {
    throw aqe::Error(aqe::ErrorKind::kInvalidArgument, "AQE_CONFIDENCE must lie in (0, 1)");
  }
  return c;
}

std::unique_ptr<aqe::Catalog> open_catalog(const std::string& dir) {
  if (fs::exists(fs::path(dir) / aqe::kManifestName)) return aqe::load_manifest(dir);
  fs::create_directories(dir);
  return std::make_unique<aqe::Catalog>(dir);
}

std::string only_table(const aqe::Catalog& catalog, const std::string& requested) {
  if (!requested.empty()) return requested;
  const auto names = catalog.table_names();
  if (names.size() != 1) {
    throw aqe::Error(aqe::ErrorKind::kInvalidArgument,
                     "catalog holds " + std::to_string(names.size()) + " tables; pass --table");
  }
  return names.front();
}

void print_result(const aqe::QueryResult& r, bool tsv, bool profile) {
  std::cout << (tsv ? r.format_tsv() : r.format_table());
  if (profile) std::cout << r.format_profiles();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate query engine over stratified samples"};
  app.require_subcommand(1);
  std::string catalog_dir = std::getenv("AQE_CATALOG") ? std::getenv("AQE_CATALOG") : "aqe-catalog";
  app.add_option("--catalog", catalog_dir, "Catalog directory (env AQE_CATALOG)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a CSV file as a table");
  std::string csv_path, table_name, schema_text;
  ingest->add_option("csv", csv_path, "CSV file with a header row")->required();
  ingest->add_option("--table", table_name, "Table name")->required();
  ingest->add_option("--schema", schema_text, "name:type,... (int, float, string)")->required();

  // profile
  auto* profile = app.add_subcommand("profile", "Extract query templates from a query log");
  std::string log_path, workload_out = "workload.txt";
  profile->add_option("log", log_path, "File with one query per line")->required();
  profile->add_option("-o,--out", workload_out, "Workload file to write");

  // plan
  auto* plan = app.add_subcommand("plan", "Choose column sets to sample");
  std::string workload_path = "workload.txt", plan_out;
  double budget = 0.5, drift = 1.0;
  int max_cols = 3;
  std::int64_t base_cap = 10000, ratio = 2;
  bool exact = false, heuristic = false;
  plan->add_option("--workload", workload_path, "Workload file from 'profile'");
  plan->add_option("--budget", budget, "Storage budget as a fraction of table rows");
  plan->add_option("--drift", drift, "Fraction of existing sample storage that may change");
  plan->add_option("--max-cols", max_cols, "Largest candidate column set");
  plan->add_option("--cap", base_cap, "Largest cap K_0");
  plan->add_option("--ratio", ratio, "Cap ratio c between levels");
  plan->add_option("-o,--out", plan_out, "Plan file to write (default: <catalog>/<table>.plan)");
  auto* exact_flag = plan->add_flag("--exact", exact, "Exhaustive solver");
  plan->add_flag("--heuristic", heuristic, "Greedy solver")->excludes(exact_flag);

  // build
  auto* build = app.add_subcommand("build", "Materialize the families of a plan");
  std::string build_plan;
  double uniform_rate = 0.01;
  build->add_option("plan", build_plan, "Plan file")->required();
  build->add_option("--uniform", uniform_rate, "Rate of the uniform sample (0 skips it)");

  // query / repl
  auto* query = app.add_subcommand("query", "Run one query");
  std::string sql;
  bool tsv = false, show_profile = false;
  query->add_option("sql", sql, "Query text")->required();
  query->add_flag("--tsv", tsv, "Tab-separated output");
  query->add_flag("--profile", show_profile, "Print error-latency profiles");
  auto* repl = app.add_subcommand("repl", "Read queries from stdin, one per line");
  repl->add_flag("--tsv", tsv, "Tab-separated output");
  repl->add_flag("--profile", show_profile, "Print error-latency profiles");

  // stats
  auto* stats = app.add_subcommand("stats", "Show table statistics");
  std::string stats_table, stats_columns;
  stats->add_option("table", stats_table, "Table name")->required();
  stats->add_option("--columns", stats_columns, "Print the histogram of this column set");

  // refresh
  auto* refresh = app.add_subcommand("refresh", "Rebuild a family with a new seed");
  std::string family_name;
  std::uint64_t refresh_seed = 0;
  refresh->add_option("family", family_name, "Family name")->required();
  auto* seed_opt = refresh->add_option("--seed", refresh_seed, "New seed (default: old seed + 1)");

  // zipf
  auto* zipf = app.add_subcommand("zipf", "Storage fraction of a stratified sample on Zipf data");
  double zs = 1.5, zm = 1e9, zk = 1e4;
  zipf->add_option("--s", zs, "Zipf exponent")->required();
  zipf->add_option("--M", zm, "Largest frequency")->required();
  zipf->add_option("--K", zk, "Cap")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*zipf) {
      std::printf("%.3f\n", aqe::zipf_overhead(zs, zm, zk));
      return 0;
    }

    auto catalog = open_catalog(catalog_dir);

    if (*ingest) {
      auto t = aqe::ingest_csv(*catalog, csv_path, table_name, aqe::parse_schema(schema_text));
      aqe::persist_manifest(*catalog);
      std::cout << "ingested " << t->name << ": " << t->row_count << " rows, " << t->blocks.size()
                << " blocks\n";
    } else if (*profile) {
      std::ifstream in(log_path);
      if (!in) throw aqe::Error(aqe::ErrorKind::kIo, "cannot open " + log_path);
      std::vector<aqe::BoundedQuery> log;
      std::string line;
      int number = 0;
      while (std::getline(in, line)) {
        ++number;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
          log.push_back(aqe::parse(line, env_confidence()));
        } catch (const aqe::Error& e) {
          throw aqe::Error(e.kind(), log_path + ":" + std::to_string(number) + ": " + e.what());
        }
      }
      const auto workload = aqe::extract_templates(log);
      aqe::write_workload(workload, workload_out);
      std::cout << "wrote " << workload.templates.size() << " templates for " << workload.table
                << " to " << workload_out << "\n";
    } else if (*plan) {
      const auto workload = aqe::read_workload(workload_path);
      const auto set =
          aqe::generate_candidates(workload, *catalog, base_cap, ratio, max_cols);
      aqe::SolveOptions opts;
      opts.budget_fraction = budget;
      opts.drift = drift;
      opts.mode = exact ? aqe::SolverMode::kExact
                        : (heuristic ? aqe::SolverMode::kHeuristic : aqe::SolverMode::kAuto);
      const auto solved = aqe::solve_plan(set, opts);
      const fs::path out =
          plan_out.empty() ? fs::path(catalog_dir) / (workload.table + ".plan") : fs::path(plan_out);
      aqe::write_plan(solved, out);
      catalog->put_plan(std::make_shared<const aqe::SamplePlan>(solved));
      aqe::persist_manifest(*catalog);
      std::cout << "plan for " << solved.table << ": " << solved.chosen_sets().size()
                << " families, " << solved.budget_used << " of " << solved.budget_rows
                << " rows, objective " << aqe::format_double(solved.objective) << " ("
                << aqe::to_string(solved.solver) << ")\n";
      for (const auto& cols : solved.chosen_sets()) std::cout << "  " << cols.to_string() << "\n";
      std::cout << "wrote " << out.string() << "\n";
    } else if (*build) {
      const auto p = aqe::read_plan(build_plan);
      const auto table = catalog->table(p.table);
      const std::uint64_t seed = env_seed();
      // Everything is built before the catalog changes.
      std::vector<std::shared_ptr<const aqe::SampleFamily>> built;
      for (const auto& cols : p.chosen_sets()) {
        const std::string name = aqe::family_name(p.table, cols);
        bool present = false;
        for (const auto& f : catalog->families_for(p.table)) {
          present = present || (f->name == name && f->base_cap == p.base_cap && f->ratio == p.ratio);
        }
        if (present) continue;
        built.push_back(std::make_shared<const aqe::SampleFamily>(
            aqe::build_family(table, cols, p.base_cap, p.ratio, seed)));
      }
      std::shared_ptr<const aqe::UniformSample> uniform;
      if (uniform_rate > 0.0) {
        uniform = std::make_shared<const aqe::UniformSample>(
            aqe::build_uniform(*table, uniform_rate, seed));
      }
      std::vector<std::string> keep;
      for (const auto& cols : p.chosen_sets()) keep.push_back(aqe::family_name(p.table, cols));
      for (const auto& f : catalog->families_for(p.table)) {
        if (std::find(keep.begin(), keep.end(), f->name) == keep.end()) {
          catalog->erase_family(f->name);
        }
      }
      for (auto& f : built) catalog->put_family(f);
      if (uniform) catalog->put_uniform(uniform);
      catalog->put_plan(std::make_shared<const aqe::SamplePlan>(p));
      aqe::persist_manifest(*catalog);
      for (const auto& f : catalog->families_for(p.table)) {
        std::cout << "family " << f->id() << ": " << f->rows.row_count() << " rows, "
                  << f->level_count() << " levels\n";
      }
      if (uniform) {
        std::cout << "uniform " << uniform->name << ": " << uniform->rows.row_count() << " rows\n";
      }
    } else if (*query || *repl) {
      aqe::EngineOptions opts;
      opts.default_confidence = env_confidence();
      aqe::Engine engine(*catalog, opts);
      if (*query) {
        print_result(engine.run(sql), tsv, show_profile);
      } else {
        const bool interactive = isatty(STDIN_FILENO);
        std::string line;
        int status = 0;
        while (true) {
          if (interactive) std::cout << "aqe> " << std::flush;
          if (!std::getline(std::cin, line)) break;
          const auto first = line.find_first_not_of(" \t\r");
          if (first == std::string::npos) continue;
          try {
            print_result(engine.run(line), tsv, show_profile);
          } catch (const aqe::Error& e) {
            std::cout << "error: " << e.what() << "\n";
            status = 1;
          }
        }
        if (interactive) std::cout << "\n";
        return status;
      }
    } else if (*stats) {
      const auto t = catalog->table(stats_table);
      std::cout << "table " << t->name << "\nrows " << t->row_count << "\nblocks "
                << t->blocks.size() << "\naverage_row_bytes "
                << aqe::format_double(t->data.average_row_bytes()) << "\n";
      for (const auto& col : t->schema) {
        const auto s = catalog->stats(t->name, aqe::ColumnSet({col.name}));
        std::cout << "column " << col.name << " " << aqe::to_string(col.type) << " distinct "
                  << s->distinct() << "\n";
      }
      if (!stats_columns.empty()) {
        const auto s = catalog->stats(t->name, aqe::ColumnSet::parse(stats_columns));
        for (const auto& [key, freq] : s->frequency) {
          std::cout << aqe::format_key(key) << "\t" << freq << "\n";
        }
      }
    } else if (*refresh) {
      const auto f = catalog->family(family_name);
      const std::uint64_t seed = seed_opt->count() ? refresh_seed : f->seed + 1;
      const auto fresh = aqe::refresh_family(*catalog, *f, seed);
      aqe::persist_manifest(*catalog);
      std::cout << "refreshed " << fresh->id() << " with seed " << seed << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
