/*
 * Copyright 2026 the mtforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// mtforge: one binary, subcommand per pipeline stage. Every run resolves its
// parameters (flags over config-file values over defaults), writes a
// snapshot.json next to its outputs, and can be re-run byte-identically from
// that snapshot via --config. All randomness flows from the single --seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtforge/bleu.hpp"
#include "mtforge/cleaning.hpp"
#include "mtforge/embed_subprocess.hpp"
#include "mtforge/evalkit.hpp"
#include "mtforge/langid.hpp"
#include "mtforge/pfms.hpp"
#include "mtforge/records.hpp"
#include "mtforge/sft.hpp"
#include "mtforge/token_metrics.hpp"
#include "mtforge/tokenizer.hpp"

namespace fs = std::filesystem;
using namespace mtforge;

namespace {

int log_level() {  // 0 quiet, 1 info, 2 debug
  const char* env = std::getenv("MTFORGE_LOG");
  if (!env) return 1;
  std::string v(env);
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[mtforge] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[mtforge] " << msg << "\n";
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + " is not valid JSON");
  return j;
}

void write_text(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

void write_json(const fs::path& path, const ojson& j) {
  write_text(path, j.dump(2) + "\n");
}

fs::path ensure_outdir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
  return p;
}

// Resolved run parameters: CLI flags win, then the command's block in the
// config file, then defaults baked into the variables.
struct RunContext {
  std::string command;
  uint64_t seed = 0;
  unsigned workers = 1;
  json config_block;  // the command's block from --config, if any

  template <typename T>
  void fill(const CLI::Option* opt, const char* key, T& value) const {
    if (opt && opt->count() > 0) return;  // explicit flag wins
    if (config_block.contains(key)) value = config_block[key].get<T>();
  }

  ojson snapshot(ojson params) const {
    ojson snap;
    snap["command"] = command;
    snap["seed"] = seed;
    snap["workers"] = workers;
    snap[command] = std::move(params);
    return snap;
  }
};

RunContext make_context(const std::string& command, const std::string& config_path,
                        const CLI::Option* seed_opt, uint64_t seed,
                        const CLI::Option* workers_opt, unsigned workers) {
  RunContext ctx;
  ctx.command = command;
  ctx.seed = seed;
  ctx.workers = workers;
  if (!config_path.empty()) {
    json cfg = load_json_file(config_path);
    if (cfg.contains("seed") && (!seed_opt || seed_opt->count() == 0))
      ctx.seed = cfg["seed"].get<uint64_t>();
    if (cfg.contains("workers") && (!workers_opt || workers_opt->count() == 0))
      ctx.workers = cfg["workers"].get<unsigned>();
    if (cfg.contains(command)) ctx.config_block = cfg[command];
  }
  return ctx;
}

std::map<std::string, std::string> parse_code_paths(const std::vector<std::string>& specs,
                                                    const char* what) {
  std::map<std::string, std::string> out;
  for (const auto& s : specs) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(what) + " expects CODE=PATH, got '" + s + "'");
    std::string code = s.substr(0, eq);
    if (!Registry::instance().contains(code))
      throw ConfigError(std::string(what) + ": unknown language code '" + code + "'");
    out[std::string(Registry::normalize(code))] = s.substr(eq + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// tokstats
// ---------------------------------------------------------------------------

int cmd_tokstats(const RunContext& ctx, std::vector<std::string> vocab_paths,
                 std::string english_path, std::vector<std::string> lang_specs,
                 std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  auto english = read_lines(english_path);
  std::map<std::string, std::vector<std::string>> aligned;
  for (const auto& [code, path] : parse_code_paths(lang_specs, "--lang"))
    aligned[code] = read_lines(path);
  if (aligned.empty()) throw ConfigError("tokstats: no --lang corpora given");

  std::vector<LengthRatioReport> reports;
  for (const auto& vp : vocab_paths) {
    VocabTokenizer tok = VocabTokenizer::from_file(vp);
    reports.push_back(corpus_efficiency(tok, aligned, english, ctx.workers));
  }
  ojson rj;
  auto arr = ojson::array();
  for (const auto& r : reports) arr.push_back(r.to_json());
  rj["reports"] = std::move(arr);
  write_json(out / "report.json", rj);
  write_text(out / "report.txt", efficiency_table(reports));

  ojson params{{"vocab", vocab_paths}, {"english", english_path}, {"out", out_dir}};
  ojson langs;
  for (const auto& s : lang_specs) {
    auto eq = s.find('=');
    langs[s.substr(0, eq)] = s.substr(eq + 1);
  }
  params["langs"] = std::move(langs);
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  for (const auto& r : reports)
    log_info("tokstats: " + r.tokenizer_name + " average ratio " +
             fmt_fixed(r.average_ratio, 4) + " over " +
             std::to_string(r.per_lang_ratio.size()) + " languages");
  return 0;
}

// ---------------------------------------------------------------------------
// clean
// ---------------------------------------------------------------------------

int cmd_clean(const RunContext& ctx, std::string in_path, std::string format,
              std::string out_dir, std::string profiles_path, std::string embed_file,
              std::string embed_cmd, unsigned hash_dim, const CleanConfig& cfg) {
  auto out = ensure_outdir(out_dir);
  ParallelFormat fmt;
  if (format == "jsonl") fmt = ParallelFormat::Jsonl;
  else if (format == "tsv") fmt = ParallelFormat::Tsv;
  else throw ConfigError("clean: unknown format '" + format + "'");

  std::vector<LangProfile> profiles;
  if (!profiles_path.empty()) profiles = profiles_from_json(load_json_file(profiles_path));

  std::unique_ptr<EmbeddingProvider> provider;
  if (!embed_file.empty()) provider = std::make_unique<PrecomputedEmbeddings>(embed_file);
  else if (!embed_cmd.empty()) provider = std::make_unique<SubprocessEmbeddings>(embed_cmd);
  else if (hash_dim > 0) provider = std::make_unique<HashingNgramEmbeddings>(hash_dim);

  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + in_path);

  std::ofstream kept(out / "kept.jsonl", std::ios::binary);
  std::ofstream quarantine(out / "quarantine.jsonl", std::ios::binary);
  std::ofstream errors(out / "errors.jsonl", std::ios::binary);

  CleaningPipeline pipe(cfg, std::move(profiles), provider.get());
  IngestStats ingest = parse_parallel_stream(
      in, fmt,
      [&](SentencePair&& p) {
        auto d = pipe.process(p);
        if (!d) {
          ojson e = p.to_json();
          e["error"] = "embedding provider failure";
          errors << e.dump() << "\n";
        } else if (d->kept) {
          kept << p.to_jsonl() << "\n";
        } else {
          ojson q = p.to_json();
          q["reason"] = std::string(to_string(d->reason));
          if (!d->detail.empty()) q["detail"] = d->detail;
          quarantine << q.dump() << "\n";
        }
      },
      [&](RecordError&& e) {
        errors << ojson{{"line", e.line}, {"reason", e.reason}, {"detail", e.detail}}.dump()
               << "\n";
      });

  ojson stats;
  stats["ingest"] = ojson{{"lines", ingest.lines},
                          {"yielded", ingest.yielded},
                          {"errored", ingest.errored},
                          {"empty_noted", ingest.empty_noted}};
  stats["clean"] = pipe.stats().to_json();
  stats["config"] = cfg.to_json();
  write_json(out / "stats.json", stats);

  ojson params{{"in", in_path},
               {"format", format},
               {"out", out_dir},
               {"profiles", profiles_path},
               {"embed_file", embed_file},
               {"embed_cmd", embed_cmd},
               {"hash_dim", hash_dim}};
  ojson cfg_json = cfg.to_json();
  for (auto& [k, v] : cfg_json.items()) params[k] = v;
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  log_info("clean: kept " + std::to_string(pipe.stats().kept()) + " of " +
           std::to_string(pipe.stats().total) + " parsed pairs");
  return 0;
}

// ---------------------------------------------------------------------------
// plan-mix
// ---------------------------------------------------------------------------

int cmd_plan_mix(const RunContext& ctx, std::string n_billions, std::string avail_path,
                 std::vector<std::string> table_paths, std::string meta_path,
                 std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  uint64_t n = parse_billions(n_billions);
  if (n == 0) throw ConfigError("plan-mix: budget must be positive");

  std::map<std::string, Availability> avail;
  if (!avail_path.empty()) {
    avail = availability_from_json(load_json_file(avail_path));
  } else if (!table_paths.empty()) {
    std::vector<PublishedTable> tables;
    for (const auto& p : table_paths) tables.push_back(load_published_table(p));
    auto est = infer_availability(std::move(tables));
    for (const auto& w : est.warnings) log_info("availability warning: " + w);
    avail = std::move(est.availability);
    write_json(out / "inferred_availability.json", availability_to_json(avail));
  } else {
    throw ConfigError("plan-mix: either --avail or --tables is required");
  }

  MixPlan plan = plan_mix(n, avail);
  if (!meta_path.empty()) plan.training_meta = load_json_file(meta_path);
  write_json(out / "mixplan.json", plan.to_json());

  ojson params{{"n", n_billions},
               {"avail", avail_path},
               {"tables", table_paths},
               {"meta", meta_path},
               {"out", out_dir}};
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  log_info("plan-mix: n=" + std::to_string(n) + " tokens, total allocation " +
           std::to_string(plan.total_tokens()));
  return 0;
}

// ---------------------------------------------------------------------------
// build-sft
// ---------------------------------------------------------------------------

int cmd_build_sft(const RunContext& ctx, std::string in_path, std::string metric,
                  double tau, std::vector<size_t> sample_sizes, std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  SelectionPolicy policy;
  policy.metric = metric;
  policy.tau = tau;

  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + in_path);

  std::ofstream records_out(out / "sft.jsonl", std::ios::binary);
  std::ofstream errors(out / "errors.jsonl", std::ios::binary);
  SftBuilder builder(policy);
  std::vector<SftRecord> records;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_ws(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    std::optional<std::string> parse_error;
    if (j.is_discarded()) {
      parse_error = "invalid JSON";
    } else {
      try {
        auto o = builder.process(CandidateSet::from_json(j));
        if (o.error) parse_error = o.error;
        else if (o.record) {
          records_out << o.record->to_json().dump() << "\n";
          records.push_back(std::move(*o.record));
        }
      } catch (const json::exception& e) {
        parse_error = e.what();
      } catch (const DataError& e) {
        parse_error = e.what();
      }
    }
    if (parse_error)
      errors << ojson{{"line", line_no}, {"error", *parse_error}}.dump() << "\n";
  }

  ojson report;
  report["policy"] = policy.to_json();
  report["distribution"] = builder.report().to_json();
  report["below_threshold"] = builder.thresholded();
  report["errored"] = builder.errored();
  write_json(out / "report.json", report);
  write_text(out / "report.txt", builder.report().render_table());

  if (!sample_sizes.empty()) {
    std::sort(sample_sizes.begin(), sample_sizes.end());
    auto subsets = sample_nested(records.size(), sample_sizes,
                                 derive_seed(ctx.seed, "sft-sample"));
    for (size_t i = 0; i < sample_sizes.size(); ++i) {
      std::ofstream s(out / ("sample_" + std::to_string(sample_sizes[i]) + ".jsonl"),
                      std::ios::binary);
      for (size_t idx : subsets[i]) s << records[idx].to_json().dump() << "\n";
    }
  }

  ojson params{{"in", in_path},
               {"metric", metric},
               {"tau", tau},
               {"sample", sample_sizes},
               {"out", out_dir}};
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  log_info("build-sft: emitted " + std::to_string(builder.report().total) + " records (" +
           std::to_string(builder.thresholded()) + " below threshold, " +
           std::to_string(builder.errored()) + " errored)");
  return 0;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

int cmd_score(const RunContext& ctx, std::string hyp_path, std::string ref_path,
              std::string vocab_path, std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  VocabTokenizer tok = VocabTokenizer::from_file(vocab_path);
  auto hyps = read_lines(hyp_path);
  auto refs = read_lines(ref_path);
  if (hyps.size() != refs.size())
    throw DataError("score: " + std::to_string(hyps.size()) + " hypotheses vs " +
                    std::to_string(refs.size()) + " references");
  BleuScore score = spbleu(hyps, refs, tok);
  write_json(out / "bleu.json", score.to_json());
  ojson params{{"hyp", hyp_path}, {"ref", ref_path}, {"vocab", vocab_path}, {"out", out_dir}};
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  std::cout << fmt_fixed(score.score, 2) << " (bp " << fmt_fixed(score.bp, 3) << ", "
            << score.tokenizer_name << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// aggregate
// ---------------------------------------------------------------------------

std::vector<DirectionGroup> groups_from_json(const json& j) {
  std::vector<DirectionGroup> out;
  auto name_of = [](const std::string& s) {
    if (s == "en->xx") return GroupName::EN2XX;
    if (s == "xx->en") return GroupName::XX2EN;
    if (s == "zh->xx") return GroupName::ZH2XX;
    if (s == "xx->zh") return GroupName::XX2ZH;
    throw ConfigError("unknown group name '" + s + "'");
  };
  for (const auto& [name, members] : j.items()) {
    DirectionGroup g;
    g.name = name_of(name);
    for (const auto& m : members) g.members.push_back(Direction::parse(m.get<std::string>()));
    out.push_back(std::move(g));
  }
  return out;
}

int cmd_aggregate(const RunContext& ctx, std::vector<std::string> score_files,
                  std::vector<std::string> systems, std::vector<std::string> metrics,
                  std::string groups_path, std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  if (score_files.empty()) throw ConfigError("aggregate: no --scores files given");
  if (systems.empty()) throw ConfigError("aggregate: no --systems given");
  ScoreMatrix matrix = ingest_scores(score_files);
  log_debug("aggregate: " + std::to_string(matrix.size()) + " score entries");
  std::vector<DirectionGroup> groups =
      groups_path.empty() ? default_groups() : groups_from_json(load_json_file(groups_path));
  AggregateTable table = aggregate(matrix, groups, systems, metrics);
  write_json(out / "table.json", table.to_json());
  write_text(out / "table.txt", table.render());
  ojson params{{"scores", score_files},
               {"systems", systems},
               {"metrics", metrics},
               {"groups", groups_path},
               {"out", out_dir}};
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  return 0;
}

// ---------------------------------------------------------------------------
// prompt
// ---------------------------------------------------------------------------

int cmd_prompt(const RunContext& ctx, std::string ex_src_path, std::string ex_tgt_path,
               std::string queries_path, std::string direction_str, size_t k,
               std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  Direction dir = Direction::parse(direction_str);
  auto ex_src = read_lines(ex_src_path);
  auto ex_tgt = read_lines(ex_tgt_path);
  if (ex_src.size() != ex_tgt.size())
    throw DataError("prompt: exemplar files are misaligned (" +
                    std::to_string(ex_src.size()) + " vs " + std::to_string(ex_tgt.size()) +
                    " lines)");
  auto queries = read_lines(queries_path);

  auto chosen = pick_exemplars(ex_src.size(), k, ctx.seed, dir);
  std::vector<std::pair<std::string, std::string>> exemplars;
  exemplars.reserve(k);
  for (size_t idx : chosen) exemplars.emplace_back(ex_src[idx], ex_tgt[idx]);

  std::ofstream prompts(out / "prompts.jsonl", std::ios::binary);
  for (const auto& q : queries) {
    IclPrompt p = build_icl_prompt(exemplars, q, k);
    prompts << ojson{{"direction", dir.str()}, {"prompt", p.rendered}}.dump() << "\n";
  }
  ojson params{{"exemplars_src", ex_src_path},
               {"exemplars_tgt", ex_tgt_path},
               {"queries", queries_path},
               {"direction", direction_str},
               {"k", k},
               {"out", out_dir}};
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  log_info("prompt: " + std::to_string(queries.size()) + " prompts for " + dir.str());
  return 0;
}

// ---------------------------------------------------------------------------
// langid-train / materialize
// ---------------------------------------------------------------------------

int cmd_langid_train(const RunContext& ctx, std::vector<std::string> sample_specs,
                     unsigned k, std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  std::map<std::string, std::vector<std::string>> samples;
  for (const auto& [code, path] : parse_code_paths(sample_specs, "--sample"))
    samples[code] = read_lines(path);
  auto profiles = train_langid(samples, k);
  write_json(out / "profiles.json", profiles_to_json(profiles));
  ojson params{{"samples", sample_specs}, {"k", k}, {"out", out_dir}};
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  log_info("langid-train: " + std::to_string(profiles.size()) + " profiles, K=" +
           std::to_string(k));
  return 0;
}

int cmd_materialize(const RunContext& ctx, std::string plan_path,
                    std::vector<std::string> corpus_specs, std::string vocab_path,
                    std::string out_dir) {
  auto out = ensure_outdir(out_dir);
  MixPlan plan = MixPlan::from_json(load_json_file(plan_path));
  VocabTokenizer tok = VocabTokenizer::from_file(vocab_path);
  std::vector<CorpusLocator> corpora;
  for (const auto& spec : corpus_specs) {
    auto parts = split(spec, ':');
    if (parts.size() != 3)
      throw ConfigError("materialize: --corpus expects LANG:POOL:FILE, got '" + spec + "'");
    Pool pool;
    if (parts[1] == "mono") pool = Pool::Mono;
    else if (parts[1] == "en_parallel") pool = Pool::EnParallel;
    else if (parts[1] == "zh_parallel") pool = Pool::ZhParallel;
    else throw ConfigError("materialize: unknown pool '" + std::string(parts[1]) + "'");
    corpora.push_back({std::string(parts[0]), pool, std::string(parts[2])});
  }

  MaterializeResult result = materialize(plan, corpora, tok, ctx.seed);
  for (const auto& w : result.warnings) log_info("materialize warning: " + w);

  std::ofstream manifest(out / "manifest.jsonl", std::ios::binary);
  for (const auto& e : result.entries) manifest << e.to_json().dump() << "\n";
  ojson outcomes;
  for (const auto& [key, o] : result.outcomes) {
    outcomes[key.first + "/" + std::string(to_string(key.second))] =
        ojson{{"target", o.target},
              {"achieved", o.achieved},
              {"records", o.records},
              {"overshoot", o.overshoot()},
              {"exhausted", o.exhausted}};
  }
  write_json(out / "outcomes.json", outcomes);
  ojson params{{"plan", plan_path},
               {"corpus", corpus_specs},
               {"vocab", vocab_path},
               {"out", out_dir}};
  write_json(out / "snapshot.json", ctx.snapshot(std::move(params)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilingual MT data-engineering and evaluation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed = 0;
  unsigned workers = 1;
  app.add_option("--config", config_path, "JSON config (a snapshot.json also works)");
  auto* seed_opt = app.add_option("--seed", seed, "global RNG seed");
  auto* workers_opt = app.add_option("--workers", workers, "worker thread count");

  // tokstats
  auto* tokstats = app.add_subcommand("tokstats", "tokenizer efficiency over an aligned corpus");
  std::string ts_english, ts_out;
  std::vector<std::string> ts_vocabs, ts_langs;
  tokstats->add_option("--vocab", ts_vocabs, "vocab asset file (repeatable: one table column each)");
  tokstats->add_option("--english", ts_english, "English sentences, one per line");
  tokstats->add_option("--lang", ts_langs, "CODE=PATH aligned sentences (repeatable)");
  tokstats->add_option("--out", ts_out, "output directory");

  // clean
  auto* clean = app.add_subcommand("clean", "run the bitext cleaning pipeline");
  std::string cl_in, cl_format = "jsonl", cl_out, cl_profiles, cl_embed_file, cl_embed_cmd;
  unsigned cl_hash_dim = 0;
  CleanConfig cl_cfg;
  clean->add_option("--in", cl_in, "input bitext file");
  clean->add_option("--format", cl_format, "jsonl|tsv");
  clean->add_option("--out", cl_out, "output directory");
  clean->add_option("--profiles", cl_profiles, "language-ID profiles JSON");
  clean->add_option("--embed-file", cl_embed_file, "precomputed embedding vectors");
  clean->add_option("--embed-cmd", cl_embed_cmd, "embedding subprocess command");
  clean->add_option("--embed-hash-dim", cl_hash_dim,
                    "use the hashing n-gram test provider at this dimension");
  clean->add_option("--max-chars", cl_cfg.max_chars, "per-side length cap");
  clean->add_option("--max-len-ratio", cl_cfg.max_len_ratio, "length-ratio cap");
  clean->add_option("--min-chars", cl_cfg.min_chars, "per-side minimum after trim");
  clean->add_option("--langid-min-margin", cl_cfg.langid_min_margin, "language-ID margin");
  clean->add_option("--sim-threshold", cl_cfg.sim_threshold, "cosine similarity floor");
  bool cl_no_dedup = false;
  clean->add_flag("--no-dedup", cl_no_dedup, "disable duplicate removal");

  // plan-mix
  auto* plan = app.add_subcommand("plan-mix", "compute per-language token allocations");
  std::string pm_n, pm_avail, pm_meta, pm_out;
  std::vector<std::string> pm_tables;
  plan->add_option("--n", pm_n, "token budget in billions (e.g. 0.1, 2)");
  plan->add_option("--avail", pm_avail, "availability JSON");
  plan->add_option("--tables", pm_tables, "published allocation tables to infer from");
  plan->add_option("--meta", pm_meta, "training metadata JSON echoed into the plan");
  plan->add_option("--out", pm_out, "output directory");

  // build-sft
  auto* sft = app.add_subcommand("build-sft", "select + filter candidate translations");
  std::string bs_in, bs_metric = "mean(xcomet,cometkiwi)", bs_out;
  double bs_tau = 0.85;
  std::vector<size_t> bs_samples;
  sft->add_option("--in", bs_in, "candidate sets JSONL");
  sft->add_option("--metric", bs_metric, "selection metric (name or mean(a,b))");
  sft->add_option("--tau", bs_tau, "score threshold (inclusive)");
  sft->add_option("--sample", bs_samples, "nested sample sizes (repeatable)");
  sft->add_option("--out", bs_out, "output directory");

  // score
  auto* score = app.add_subcommand("score", "corpus spBLEU of hypothesis vs reference");
  std::string sc_hyp, sc_ref, sc_vocab, sc_out;
  score->add_option("--hyp", sc_hyp, "hypotheses, one per line");
  score->add_option("--ref", sc_ref, "references, one per line");
  score->add_option("--vocab", sc_vocab, "subword vocab asset");
  score->add_option("--out", sc_out, "output directory");

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "direction-group score averages");
  std::vector<std::string> ag_scores, ag_systems, ag_metrics = {"spbleu", "comet"};
  std::string ag_groups, ag_out;
  agg->add_option("--scores", ag_scores, "score files, JSONL or table CSV (repeatable)");
  agg->add_option("--systems", ag_systems, "systems to tabulate (repeatable)");
  agg->add_option("--metrics", ag_metrics, "metrics per cell (repeatable)");
  agg->add_option("--groups", ag_groups, "group membership JSON (default: registry groups)");
  agg->add_option("--out", ag_out, "output directory");

  // prompt
  auto* prompt = app.add_subcommand("prompt", "few-shot translation prompts");
  std::string pr_src, pr_tgt, pr_queries, pr_dir, pr_out;
  size_t pr_k = 8;
  prompt->add_option("--exemplars-src", pr_src, "exemplar source sentences");
  prompt->add_option("--exemplars-tgt", pr_tgt, "exemplar target sentences");
  prompt->add_option("--queries", pr_queries, "query source sentences");
  prompt->add_option("--direction", pr_dir, "translation direction, e.g. en->de");
  prompt->add_option("--k", pr_k, "exemplar count");
  prompt->add_option("--out", pr_out, "output directory");

  // langid-train
  auto* lt = app.add_subcommand("langid-train", "train language-ID rank profiles");
  std::vector<std::string> lt_samples;
  unsigned lt_k = 300;
  std::string lt_out;
  lt->add_option("--sample", lt_samples, "CODE=PATH sample text (repeatable)");
  lt->add_option("--k", lt_k, "profile size");
  lt->add_option("--out", lt_out, "output directory");

  // materialize
  auto* mat = app.add_subcommand("materialize", "sample corpora against a mix plan");
  std::string mt_plan, mt_vocab, mt_out;
  std::vector<std::string> mt_corpora;
  mat->add_option("--plan", mt_plan, "mix plan JSON");
  mat->add_option("--corpus", mt_corpora, "LANG:POOL:FILE (repeatable)");
  mat->add_option("--vocab", mt_vocab, "tokenizer for record costs");
  mat->add_option("--out", mt_out, "output directory");

  // Global options (--seed, --config, --workers) are accepted after the
  // subcommand as well.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors share the config-error exit code
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    RunContext ctx = make_context(sub->get_name(), config_path, seed_opt, seed,
                                  workers_opt, workers);
    auto fill_s = [&](const char* flag, const char* key, std::string& v) {
      ctx.fill(sub->get_option(flag), key, v);
    };

    if (sub == tokstats) {
      if (ts_vocabs.empty() && ctx.config_block.contains("vocab"))
        ts_vocabs = ctx.config_block["vocab"].get<std::vector<std::string>>();
      fill_s("--english", "english", ts_english);
      fill_s("--out", "out", ts_out);
      if (ts_langs.empty() && ctx.config_block.contains("langs"))
        for (const auto& [code, path] : ctx.config_block["langs"].items())
          ts_langs.push_back(code + "=" + path.get<std::string>());
      if (ts_vocabs.empty() || ts_english.empty() || ts_out.empty())
        throw ConfigError("tokstats: --vocab, --english and --out are required");
      return cmd_tokstats(ctx, ts_vocabs, ts_english, ts_langs, ts_out);
    }
    if (sub == clean) {
      fill_s("--in", "in", cl_in);
      fill_s("--format", "format", cl_format);
      fill_s("--out", "out", cl_out);
      fill_s("--profiles", "profiles", cl_profiles);
      fill_s("--embed-file", "embed_file", cl_embed_file);
      fill_s("--embed-cmd", "embed_cmd", cl_embed_cmd);
      ctx.fill(sub->get_option("--embed-hash-dim"), "hash_dim", cl_hash_dim);
      ctx.fill(sub->get_option("--max-chars"), "max_chars", cl_cfg.max_chars);
      ctx.fill(sub->get_option("--max-len-ratio"), "max_len_ratio", cl_cfg.max_len_ratio);
      ctx.fill(sub->get_option("--min-chars"), "min_chars", cl_cfg.min_chars);
      ctx.fill(sub->get_option("--langid-min-margin"), "langid_min_margin",
               cl_cfg.langid_min_margin);
      ctx.fill(sub->get_option("--sim-threshold"), "sim_threshold", cl_cfg.sim_threshold);
      if (cl_no_dedup) cl_cfg.dedup = false;
      else if (ctx.config_block.contains("dedup"))
        cl_cfg.dedup = ctx.config_block["dedup"].get<bool>();
      if (cl_in.empty() || cl_out.empty())
        throw ConfigError("clean: --in and --out are required");
      return cmd_clean(ctx, cl_in, cl_format, cl_out, cl_profiles, cl_embed_file,
                       cl_embed_cmd, cl_hash_dim, cl_cfg);
    }
    if (sub == plan) {
      fill_s("--n", "n", pm_n);
      fill_s("--avail", "avail", pm_avail);
      fill_s("--meta", "meta", pm_meta);
      fill_s("--out", "out", pm_out);
      if (pm_tables.empty() && ctx.config_block.contains("tables"))
        pm_tables = ctx.config_block["tables"].get<std::vector<std::string>>();
      if (pm_n.empty() || pm_out.empty())
        throw ConfigError("plan-mix: --n and --out are required");
      return cmd_plan_mix(ctx, pm_n, pm_avail, pm_tables, pm_meta, pm_out);
    }
    if (sub == sft) {
      fill_s("--in", "in", bs_in);
      fill_s("--metric", "metric", bs_metric);
      fill_s("--out", "out", bs_out);
      ctx.fill(sub->get_option("--tau"), "tau", bs_tau);
      if (bs_samples.empty() && ctx.config_block.contains("sample"))
        bs_samples = ctx.config_block["sample"].get<std::vector<size_t>>();
      if (bs_in.empty() || bs_out.empty())
        throw ConfigError("build-sft: --in and --out are required");
      return cmd_build_sft(ctx, bs_in, bs_metric, bs_tau, bs_samples, bs_out);
    }
    if (sub == score) {
      fill_s("--hyp", "hyp", sc_hyp);
      fill_s("--ref", "ref", sc_ref);
      fill_s("--vocab", "vocab", sc_vocab);
      fill_s("--out", "out", sc_out);
      if (sc_hyp.empty() || sc_ref.empty() || sc_vocab.empty() || sc_out.empty())
        throw ConfigError("score: --hyp, --ref, --vocab and --out are required");
      return cmd_score(ctx, sc_hyp, sc_ref, sc_vocab, sc_out);
    }
    if (sub == agg) {
      if (ag_scores.empty() && ctx.config_block.contains("scores"))
        ag_scores = ctx.config_block["scores"].get<std::vector<std::string>>();
      if (ag_systems.empty() && ctx.config_block.contains("systems"))
        ag_systems = ctx.config_block["systems"].get<std::vector<std::string>>();
      if (sub->get_option("--metrics")->count() == 0 && ctx.config_block.contains("metrics"))
        ag_metrics = ctx.config_block["metrics"].get<std::vector<std::string>>();
      fill_s("--groups", "groups", ag_groups);
      fill_s("--out", "out", ag_out);
      if (ag_out.empty()) throw ConfigError("aggregate: --out is required");
      return cmd_aggregate(ctx, ag_scores, ag_systems, ag_metrics, ag_groups, ag_out);
    }
    if (sub == prompt) {
      fill_s("--exemplars-src", "exemplars_src", pr_src);
      fill_s("--exemplars-tgt", "exemplars_tgt", pr_tgt);
      fill_s("--queries", "queries", pr_queries);
      fill_s("--direction", "direction", pr_dir);
      fill_s("--out", "out", pr_out);
      ctx.fill(sub->get_option("--k"), "k", pr_k);
      if (pr_src.empty() || pr_tgt.empty() || pr_queries.empty() || pr_dir.empty() ||
          pr_out.empty())
        throw ConfigError(
            "prompt: --exemplars-src, --exemplars-tgt, --queries, --direction and --out are "
            "required");
      return cmd_prompt(ctx, pr_src, pr_tgt, pr_queries, pr_dir, pr_k, pr_out);
    }
    if (sub == lt) {
      if (lt_samples.empty() && ctx.config_block.contains("samples"))
        lt_samples = ctx.config_block["samples"].get<std::vector<std::string>>();
      ctx.fill(sub->get_option("--k"), "k", lt_k);
      fill_s("--out", "out", lt_out);
      if (lt_samples.empty() || lt_out.empty())
        throw ConfigError("langid-train: --sample and --out are required");
      return cmd_langid_train(ctx, lt_samples, lt_k, lt_out);
    }
    if (sub == mat) {
      fill_s("--plan", "plan", mt_plan);
      fill_s("--vocab", "vocab", mt_vocab);
      fill_s("--out", "out", mt_out);
      if (mt_corpora.empty() && ctx.config_block.contains("corpus"))
        mt_corpora = ctx.config_block["corpus"].get<std::vector<std::string>>();
      if (mt_plan.empty() || mt_vocab.empty() || mt_out.empty())
        throw ConfigError("materialize: --plan, --vocab and --out are required");
      return cmd_materialize(ctx, mt_plan, mt_corpora, mt_vocab, mt_out);
    }
    throw ConfigError("unhandled subcommand");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
