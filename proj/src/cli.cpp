#include "emosem/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emosem/error.hpp"
#include "emosem/experiment.hpp"
#include "emosem/parallel.hpp"
#include "emosem/text.hpp"

namespace emosem {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

// Thrown for problems the user can fix on the command line.
struct UsageError {
  std::string message;
};

template <typename Fn>
auto stage_wrap(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const fs::filesystem_error& e) {
    throw StageError(name, Error(ErrorCode::io, e.what()));
  }
}

ExperimentConfig base_config(const Globals& g) {
  if (g.config.empty()) return {};
  if (!fs::exists(g.config)) throw UsageError{"config file not found: " + g.config};
  try {
    return load_experiment_config(g.config);
  } catch (const Error& e) {
    throw UsageError{"config file " + g.config + ": " + e.what()};
  }
}

BackendConfig backend_option(const std::string& shorthand, const BackendConfig& from_config) {
  if (shorthand.empty()) return from_config;
  try {
    auto cfg = backend_from_shorthand(shorthand);
    if (cfg.kind == BackendKind::http) {
      // Endpoint and credentials come from the config file.
      auto merged = from_config;
      merged.kind = BackendKind::http;
      return merged;
    }
    return cfg;
  } catch (const Error& e) {
    throw UsageError{e.what()};
  }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

ordered_json stats_json(const DatasetStats& s) {
  return {{"n_records", s.n_records},
          {"rate_intended_experienced", s.rate_intended_experienced},
          {"rate_other_emotions", s.rate_other_emotions},
          {"rate_intended_highest", s.rate_intended_highest},
          {"alpha", s.alpha.value},
          {"alpha_observed_disagreement", s.alpha.observed_disagreement},
          {"alpha_expected_disagreement", s.alpha.expected_disagreement}};
}

std::vector<SegmentRow> segment_corpus(const Corpus& corpus, const LanguageModel& llm,
                                       const SegmentOptions& options, int parallelism) {
  std::vector<SegmentRow> rows(corpus.records.size());
  parallel_for(corpus.records.size(), parallelism, [&](std::size_t i) {
    const auto& r = corpus.records[i];
    if (!r.transcript) {
      throw Error(ErrorCode::empty_transcript,
                  "record " + r.key() + " has no transcript; run transcribe first");
    }
    rows[i] = {r.participant_id, r.clip_id, segment(*r.transcript, llm, options),
               transcript_hash(*r.transcript), llm.id()};
  });
  return rows;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Descriptive/expressive semantics emotion pipeline", "emosem"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "TOML experiment config")->option_text("FILE");
  app.add_option("--seed", g.seed, "Seed override");
  app.add_option("--out", g.out, "Output path (file or directory)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus")->fallthrough();
  std::optional<int> participants;
  std::optional<double> noise, dsig, esig;
  synth->add_option("--participants", participants, "Number of participants");
  synth->add_option("--noise", noise, "evoked_noise in [0,1]");
  synth->add_option("--descriptive-signal", dsig, "descriptive_signal in [0,1]");
  synth->add_option("--expressive-signal", esig, "expressive_signal in [0,1]");

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus")->fallthrough();
  std::string corpus_path;
  ingest->add_option("corpus", corpus_path, "Records JSONL")->required();

  auto* transcribe_cmd =
      app.add_subcommand("transcribe", "Fill missing transcripts from audio")->fallthrough();
  std::string backend;
  std::string fixture;
  transcribe_cmd->add_option("corpus", corpus_path, "Records JSONL")->required();
  transcribe_cmd->add_option("--backend", backend, "mock-fixture | http");
  transcribe_cmd->add_option("--fixture", fixture, "JSON map locator -> transcript");

  auto* segment_cmd =
      app.add_subcommand("segment", "Segment transcripts into descriptive/expressive parts")
          ->fallthrough();
  segment_cmd->add_option("corpus", corpus_path, "Records JSONL")->required();
  segment_cmd->add_option("--backend", backend, "mock-rule | mock-random | http");

  auto* agree = app.add_subcommand("agree", "Segmentation agreement table")->fallthrough();
  std::string segments_path;
  std::vector<std::string> human;
  agree->add_option("corpus", corpus_path, "Records JSONL")->required();
  agree->add_option("--segments", segments_path, "Segmentation JSONL (default: rule mock)");
  agree->add_option("--human", human, "Human segmentation JSONL files");

  auto* stats = app.add_subcommand("stats", "Intended vs evoked statistics")->fallthrough();
  std::optional<int> threshold;
  bool strict = false;
  stats->add_option("corpus", corpus_path, "Records JSONL")->required();
  stats->add_option("--threshold", threshold, "Evoked threshold (default 1)");
  stats->add_flag("--strict", strict, "Ties do not count as highest");

  auto* run_cmd = app.add_subcommand("run", "Run the full experiment")->fallthrough();

  auto* figures = app.add_subcommand("figures", "Write figure CSVs")->fallthrough();
  std::optional<int> fig_participants;
  figures->add_option("corpus", corpus_path, "Records JSONL")->required();
  figures->add_option("--participants", fig_participants, "Participants for bar data");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.back()->help());
    return kExitUsage;
  }

  try {
    ExperimentConfig cfg = base_config(g);

    if (synth->parsed()) {
      SynthConfig sc = cfg.synth;
      if (g.seed) sc.seed = *g.seed;
      if (participants) sc.n_participants = *participants;
      if (noise) sc.evoked_noise = *noise;
      if (dsig) sc.descriptive_signal = *dsig;
      if (esig) sc.expressive_signal = *esig;
      try {
        validate(sc);
      } catch (const Error& e) {
        throw UsageError{e.what()};
      }
      const std::string path = g.out.empty() ? "corpus.jsonl" : g.out;
      const auto corpus = stage_wrap("synth", [&] { return synthesize_corpus(sc); });
      stage_wrap("synth", [&] {
        write_corpus(corpus, path);
        return 0;
      });
      out << "wrote " << corpus.records.size() << " records to " << path << "\n";
      return kExitOk;
    }

    if (ingest->parsed()) {
      const auto corpus = stage_wrap("ingest", [&] { return load_corpus(corpus_path); });
      ordered_json j = {{"records", corpus.records.size()},
                        {"participants", corpus.participants().size()},
                        {"clips", corpus.clips.size()},
                        {"provenance", corpus.provenance},
                        {"with_transcript",
                         std::count_if(corpus.records.begin(), corpus.records.end(),
                                       [](const auto& r) { return r.transcript.has_value(); })}};
      out << j.dump(2) << "\n";
      return kExitOk;
    }

    if (transcribe_cmd->parsed()) {
      auto asr = backend_option(backend, cfg.asr);
      if (!fixture.empty()) asr.fixture_path = fixture;
      auto corpus = stage_wrap("ingest", [&] { return load_corpus(corpus_path); });
      std::size_t filled = 0;
      stage_wrap("transcribe", [&] {
        const auto t = make_transcriber(asr);
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < corpus.records.size(); ++i) {
          if (!corpus.records[i].transcript) missing.push_back(i);
        }
        parallel_for(missing.size(), cfg.parallelism, [&](std::size_t k) {
          auto& r = corpus.records[missing[k]];
          r.transcript = t->transcribe(*r.audio_ref).text;
        });
        filled = missing.size();
        write_corpus(corpus, g.out.empty() ? corpus_path : g.out);
        return 0;
      });
      out << "transcribed " << filled << " records\n";
      return kExitOk;
    }

    if (segment_cmd->parsed()) {
      const auto llm_cfg = backend_option(backend, cfg.llm);
      const auto corpus = stage_wrap("ingest", [&] { return load_corpus(corpus_path); });
      const auto rows = stage_wrap("segment", [&] {
        const auto llm = make_language_model(llm_cfg);
        return segment_corpus(corpus, *llm, cfg.segmenter, cfg.parallelism);
      });
      std::ostringstream buf;
      for (const auto& r : rows) buf << render_segment_row(r) << "\n";
      stage_wrap("segment", [&] {
        write_text(g.out, buf.str(), out);
        return 0;
      });
      return kExitOk;
    }

    if (agree->parsed()) {
      const auto corpus = stage_wrap("ingest", [&] { return load_corpus(corpus_path); });
      const auto table = stage_wrap("agree", [&] {
        std::vector<SegmentRow> rows;
        if (segments_path.empty()) {
          rows = segment_corpus(corpus, RuleMockLanguageModel{}, cfg.segmenter, cfg.parallelism);
        } else {
          rows = load_segment_rows(segments_path);
        }
        std::map<std::string, SegmentedTranscript> by_key;
        std::string name = rows.empty() ? "segments" : rows.front().backend_id;
        if (name.empty()) name = "segments";
        for (auto& r : rows) by_key[r.key()] = r.segments;
        const auto embedder = make_embedder(cfg.embed);
        ordered_json table = ordered_json::array();
        auto add = [&](const std::string& pair_name,
                       const std::vector<std::pair<SegmentedTranscript, SegmentedTranscript>>& p) {
          RoleAgreement per;
          const auto res = mean_segmentation_agreement(p, *embedder, &per);
          table.push_back({{"pair", pair_name},
                           {"descriptive", per.descriptive},
                           {"expressive", per.expressive},
                           {"n_items", res.n_items}});
        };
        std::vector<std::pair<SegmentedTranscript, SegmentedTranscript>> pairs;
        if (corpus.is_synthetic()) {
          for (const auto& r : corpus.records) {
            const auto it = by_key.find(r.key());
            if (it != by_key.end()) pairs.emplace_back(it->second, gold_segments(corpus, r));
          }
          add(name + " & gold", pairs);
        }
        for (const auto& h : human) {
          pairs.clear();
          for (auto& row : load_segment_rows(h)) {
            const auto it = by_key.find(row.key());
            if (it != by_key.end()) pairs.emplace_back(it->second, row.segments);
          }
          add(name + " & human:" + fs::path(h).filename().string(), pairs);
        }
        pairs.clear();
        for (const auto& r : corpus.records) {
          if (!r.transcript) continue;
          pairs.emplace_back(random_segment(*r.transcript, 1), random_segment(*r.transcript, 2));
        }
        add("random & random", pairs);
        return table;
      });
      write_text(g.out, table.dump(2) + "\n", out);
      return kExitOk;
    }

    if (stats->parsed()) {
      const auto corpus = stage_wrap("ingest", [&] { return load_corpus(corpus_path); });
      const auto s = stage_wrap("stats", [&] {
        return dataset_stats(corpus, threshold.value_or(cfg.threshold),
                             strict ? HighestTieRule::strict : cfg.tie_rule);
      });
      write_text(g.out, stats_json(s).dump(2) + "\n", out);
      return kExitOk;
    }

    if (run_cmd->parsed()) {
      if (g.seed) cfg.seeds = {*g.seed};
      if (!g.out.empty()) cfg.output_dir = g.out;
      const auto report = run(cfg);
      out << "wrote " << report.files.size() << " files to " << cfg.output_dir.string() << "\n";
      for (const auto& c : report.comparisons) {
        out << to_string(c.task) << ": descriptive " << c.descriptive_mean << ", expressive "
            << c.expressive_mean << "\n";
      }
      return kExitOk;
    }

    if (figures->parsed()) {
      const auto corpus = stage_wrap("ingest", [&] { return load_corpus(corpus_path); });
      const auto files = stage_wrap("figures", [&] {
        return emit_figures(corpus, g.out.empty() ? fs::path(".") : fs::path(g.out),
                            fig_participants.value_or(cfg.figure_participants));
      });
      for (const auto& f : files) out << f.string() << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.message << "\n";
    return kExitUsage;
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitStageFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitStageFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }
  return kExitUsage;
}

}  // namespace emosem
