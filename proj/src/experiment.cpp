#include "emosem/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emosem/error.hpp"
#include "emosem/parallel.hpp"
#include "emosem/text.hpp"

namespace emosem {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

const CellSummary* ExperimentReport::summary(Task task, Condition condition) const {
  for (const auto& s : summaries) {
    if (s.task == task && s.condition == condition) return &s;
  }
  return nullptr;
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename onto '" + path.string() + "': " + ec.message());
}

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
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

const std::vector<Task>& all_tasks() {
  static const std::vector<Task> t{Task::intended, Task::evoked, Task::valence, Task::arousal};
  return t;
}

std::string doc_for(Condition c, const ResponseRecord& r, const SegmentedTranscript& s) {
  switch (c) {
    case Condition::full: return r.transcript.value_or("");
    case Condition::descriptive: return s.descriptive;
    case Condition::expressive: return s.expressive;
  }
  return {};
}

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.std += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(m.std / static_cast<double>(v.size()));
  return m;
}

std::string model_file_name(Task t, Condition c, std::uint64_t seed) {
  return std::string(to_string(t)) + "_" + std::string(to_string(c)) + "_seed" +
         std::to_string(seed) + ".json";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::set<std::string> words_of(const std::string& s) {
  auto w = text::words(s);
  return {w.begin(), w.end()};
}

}  // namespace

ExperimentReport run(const ExperimentConfig& config) {
  stage("config", [&] {
    validate(config);
    return 0;
  });
  ExperimentReport report;
  report.config_hash = experiment_config_hash(config);
  const fs::path out = config.output_dir;
  stage("output", [&] { return fs::create_directories(out); });

  // ------------------------------------------------------------- corpus
  Corpus corpus = stage("corpus", [&] {
    return config.corpus_path.empty() ? synthesize_corpus(config.synth)
                                      : load_corpus(config.corpus_path);
  });
  report.corpus_provenance = corpus.provenance;

  // --------------------------------------------------------- transcribe
  stage("transcribe", [&] {
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
      if (!corpus.records[i].transcript) missing.push_back(i);
    }
    if (missing.empty()) return 0;
    const auto asr = make_transcriber(config.asr);
    parallel_for(missing.size(), config.parallelism, [&](std::size_t k) {
      auto& r = corpus.records[missing[k]];
      r.transcript = asr->transcribe(*r.audio_ref).text;
    });
    return 0;
  });
  stage("corpus", [&] {
    write_corpus(corpus, out / "corpus" / "corpus.jsonl");
    return 0;
  });

  // ------------------------------------------------------------ segment
  const auto llm = stage("segment", [&] { return make_language_model(config.llm); });
  report.backend_llm = llm->id();
  const fs::path seg_path = out / "segments.jsonl";
  std::vector<SegmentedTranscript> segs(corpus.records.size());
  stage("segment", [&] {
    SegmentCache cache;
    if (fs::exists(seg_path)) cache = SegmentCache(load_segment_rows(seg_path));
    std::vector<bool> done(corpus.records.size(), false);
    std::mutex mu;
    std::exception_ptr failure;
    try {
      parallel_for(corpus.records.size(), config.parallelism, [&](std::size_t i) {
        const std::string& t = *corpus.records[i].transcript;
        {
          std::lock_guard lock(mu);
          if (const auto* hit = cache.find(t, llm->id())) {
            segs[i] = *hit;
            done[i] = true;
            return;
          }
        }
        auto s = segment(t, *llm, config.segmenter);
        std::lock_guard lock(mu);
        segs[i] = s;
        done[i] = true;
      });
    } catch (...) {
      failure = std::current_exception();
    }
    // Completed rows are persisted even when a later record failed.
    std::vector<SegmentRow> rows;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
      if (!done[i]) continue;
      const auto& r = corpus.records[i];
      rows.push_back({r.participant_id, r.clip_id, segs[i], transcript_hash(*r.transcript),
                      llm->id()});
    }
    std::ostringstream buf;
    for (const auto& row : rows) buf << render_segment_row(row) << '\n';
    write_file_atomic(seg_path, buf.str());
    if (failure) std::rethrow_exception(failure);
    return 0;
  });
  {
    double cov = 0.0;
    for (const auto& s : segs) cov += s.coverage.value_or(1.0);
    report.mean_segment_coverage = segs.empty() ? 0.0 : cov / static_cast<double>(segs.size());
  }

  // -------------------------------------------------------------- stats
  report.dataset =
      stage("stats", [&] { return dataset_stats(corpus, config.threshold, config.tie_rule); });

  // ---------------------------------------------------------- agreement
  stage("agreement", [&] {
    const auto embedder = make_embedder(config.embed);
    report.backend_embed = embedder->id();
    auto add_row = [&](const std::string& name,
                       const std::vector<std::pair<SegmentedTranscript, SegmentedTranscript>>& p) {
      RoleAgreement per;
      const auto res = mean_segmentation_agreement(p, *embedder, &per);
      report.segmentation_agreement.push_back({name, per.descriptive, per.expressive, res.n_items});
    };
    std::vector<std::pair<SegmentedTranscript, SegmentedTranscript>> pairs;
    if (corpus.is_synthetic()) {
      for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        pairs.emplace_back(segs[i], gold_segments(corpus, corpus.records[i]));
      }
      add_row(llm->id() + " & gold", pairs);
    }
    for (const auto& human_path : config.human_segments) {
      std::map<std::string, SegmentedTranscript> human;
      for (auto& row : load_segment_rows(human_path)) human[row.key()] = row.segments;
      pairs.clear();
      for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto it = human.find(corpus.records[i].key());
        if (it != human.end()) pairs.emplace_back(segs[i], it->second);
      }
      if (pairs.empty()) {
        report.warnings.push_back("human segments '" + human_path.string() +
                                  "' match no corpus record");
        continue;
      }
      add_row(llm->id() + " & human:" + human_path.filename().string(), pairs);
    }
    pairs.clear();
    for (const auto& r : corpus.records) {
      pairs.emplace_back(random_segment(*r.transcript, 1), random_segment(*r.transcript, 2));
    }
    add_row("random & random", pairs);
    return 0;
  });

  // -------------------------------------------------------------- train
  const bool has_desc = std::count(config.conditions.begin(), config.conditions.end(),
                                   Condition::descriptive) > 0;
  const bool has_expr = std::count(config.conditions.begin(), config.conditions.end(),
                                   Condition::expressive) > 0;
  std::vector<SplitAssignment> splits = stage("split", [&] {
    std::vector<SplitAssignment> s;
    for (auto seed : config.seeds) s.push_back(split_by_participant(corpus, seed));
    return s;
  });

  struct Job {
    std::size_t seed_index;
    Condition condition;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < config.seeds.size(); ++si) {
    for (auto c : config.conditions) jobs.push_back({si, c});
  }
  // cells[job][task]
  std::vector<std::vector<CellResult>> job_cells(jobs.size());
  std::vector<std::vector<TrainedModel>> job_models(jobs.size());
  stage("train", [&] {
    parallel_for(jobs.size(), config.parallelism, [&](std::size_t j) {
      const auto& job = jobs[j];
      const auto& split = splits[job.seed_index];
      const auto seed = config.seeds[job.seed_index];
      std::vector<std::string> train_docs, test_docs, test_keys;
      std::vector<const ResponseRecord*> train_recs, test_recs;
      for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& r = corpus.records[i];
        const auto part = split.part_of(r.participant_id);
        if (part == SplitAssignment::Part::train) {
          train_docs.push_back(doc_for(job.condition, r, segs[i]));
          train_recs.push_back(&r);
        } else if (part == SplitAssignment::Part::test) {
          test_docs.push_back(doc_for(job.condition, r, segs[i]));
          test_recs.push_back(&r);
          test_keys.push_back(r.key());
        }
      }
      const auto vec = Vectorizer::fit(train_docs, config.min_df, config.max_features);
      const auto x_train = vec.transform_all(train_docs);
      const auto x_test = vec.transform_all(test_docs);
      const auto fingerprint = documents_fingerprint(train_docs);

      for (Task task : all_tasks()) {
        TrainedModel m;
        CellResult cell;
        switch (task) {
          case Task::intended: {
            std::vector<Emotion> y, g;
            for (auto* r : train_recs) y.push_back(r->intended);
            for (auto* r : test_recs) g.push_back(r->intended);
            m = train_intended(x_train, y, vec.size(), config.hyper_intended);
            cell.classification = evaluate_classification(m, x_test, g);
            break;
          }
          case Task::evoked: {
            std::vector<LabelSet> y, g;
            for (auto* r : train_recs) y.push_back(binarize_evoked(r->evoked, config.threshold));
            for (auto* r : test_recs) g.push_back(binarize_evoked(r->evoked, config.threshold));
            m = train_evoked(x_train, y, vec.size(), config.hyper_evoked);
            cell.classification = evaluate_classification(m, x_test, g);
            break;
          }
          case Task::valence:
          case Task::arousal: {
            std::vector<double> y, g;
            const bool val = task == Task::valence;
            for (auto* r : train_recs) y.push_back(val ? r->valence : r->arousal);
            for (auto* r : test_recs) g.push_back(val ? r->valence : r->arousal);
            m = train_va(x_train, y, vec.size(), task, config.hyper_va);
            m.task = task;
            cell.regression = evaluate_regression(m, x_test, g);
            break;
          }
        }
        m.condition = job.condition;
        m.vectorizer = vec;
        m.meta.seed = seed;
        m.meta.input_fingerprint = fingerprint;
        cell.task = task;
        cell.condition = job.condition;
        cell.seed = seed;
        cell.test_keys = test_keys;
        cell.meta = m.meta;
        cell.vocabulary_size = vec.size();
        job_cells[j].push_back(std::move(cell));
        job_models[j].push_back(std::move(m));
      }
    });
    return 0;
  });

  stage("models", [&] {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      for (const auto& m : job_models[j]) {
        write_file_atomic(out / "models" / model_file_name(m.task, m.condition, m.meta.seed),
                          model_to_json(m));
      }
    }
    return 0;
  });

  // Order cells by (task, condition as configured, seed).
  for (Task task : all_tasks()) {
    for (auto c : config.conditions) {
      for (std::size_t si = 0; si < config.seeds.size(); ++si) {
        for (std::size_t j = 0; j < jobs.size(); ++j) {
          if (jobs[j].seed_index != si || jobs[j].condition != c) continue;
          for (auto& cell : job_cells[j]) {
            if (cell.task == task) report.cells.push_back(cell);
          }
        }
      }
    }
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (const auto& m : job_models[j]) {
      for (const auto& w : m.meta.warnings) {
        report.warnings.push_back("seed " + std::to_string(m.meta.seed) + " " +
                                  std::string(to_string(m.condition)) + ": " + w);
      }
    }
  }

  // ---------------------------------------------------------- isolation
  stage("isolation", [&] {
    auto& iso = report.isolation;
    // Every model's recorded input fingerprint must be that of its own
    // condition's training documents.
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto& split = splits[jobs[j].seed_index];
      std::map<Condition, std::uint64_t> fp;
      for (auto c : config.conditions) {
        std::vector<std::string> docs;
        for (std::size_t i = 0; i < corpus.records.size(); ++i) {
          if (split.part_of(corpus.records[i].participant_id) == SplitAssignment::Part::train) {
            docs.push_back(doc_for(c, corpus.records[i], segs[i]));
          }
        }
        fp[c] = documents_fingerprint(docs);
      }
      for (const auto& m : job_models[j]) {
        if (m.meta.input_fingerprint != fp[m.condition]) iso.fingerprints_match = false;
        for (const auto& [c, f] : fp) {
          if (c != m.condition && f == m.meta.input_fingerprint) iso.fingerprints_match = false;
        }
      }
    }
    iso.checked = true;
    iso.passed = iso.fingerprints_match;
    const bool partitioned_source =
        !segs.empty() && (segs.front().source == SegmentSource::rule_mock ||
                          segs.front().source == SegmentSource::gold);
    if (corpus.is_synthetic() && template_vocabularies_disjoint() && partitioned_source) {
      std::set<std::string> desc_words, expr_words;
      for (const auto& s : segs) {
        auto d = words_of(s.descriptive);
        auto e = words_of(s.expressive);
        desc_words.insert(d.begin(), d.end());
        expr_words.insert(e.begin(), e.end());
      }
      std::set<std::string> leaked;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto c = jobs[j].condition;
        if (c == Condition::full || job_models[j].empty()) continue;
        const auto& other = c == Condition::descriptive ? expr_words : desc_words;
        for (const auto& term : job_models[j].front().vectorizer.vocabulary()) {
          for (const auto& w : text::words(term)) {
            if (other.contains(w)) leaked.insert(w);
          }
        }
      }
      iso.leaked_tokens.assign(leaked.begin(), leaked.end());
      iso.passed = iso.passed && leaked.empty();
      iso.note = "fingerprints and vocabulary disjointness checked";
    } else {
      iso.note = "fingerprints checked; vocabulary disjointness needs a synthetic corpus "
                 "segmented by the rule mock";
    }
    if (!iso.passed) report.warnings.push_back("condition isolation check failed");
    return 0;
  });

  // -------------------------------------------------------- summaries
  for (Task task : all_tasks()) {
    for (auto c : config.conditions) {
      CellSummary s{task, c, {}};
      std::map<std::string, std::vector<double>> vals;
      for (const auto& cell : report.cells) {
        if (cell.task != task || cell.condition != c) continue;
        if (cell.classification) {
          vals["macro_precision"].push_back(cell.classification->macro_precision);
          vals["macro_recall"].push_back(cell.classification->macro_recall);
          vals["macro_f1"].push_back(cell.classification->macro_f1);
          vals["micro_f1"].push_back(cell.classification->micro_f1);
        } else {
          vals["mse"].push_back(cell.regression->mse);
          vals["mae"].push_back(cell.regression->mae);
        }
      }
      for (const auto& [k, v] : vals) s.metrics[k] = mean_std(v);
      report.summaries.push_back(std::move(s));
    }
  }
  if (has_desc && has_expr) {
    for (Task task : all_tasks()) {
      const bool cls = task == Task::intended || task == Task::evoked;
      const std::string key = cls ? "macro_f1" : "mse";
      ConditionComparison cmp;
      cmp.task = task;
      cmp.descriptive_mean = report.summary(task, Condition::descriptive)->metrics.at(key).mean;
      cmp.expressive_mean = report.summary(task, Condition::expressive)->metrics.at(key).mean;
      cmp.descriptive_minus_expressive = cmp.descriptive_mean - cmp.expressive_mean;
      report.comparisons.push_back(cmp);
    }
  }

  // ---------------------------------------------------------- wilcoxon
  if (!(has_desc && has_expr)) {
    report.wilcoxon_note =
        "Wilcoxon comparison skipped: conditions do not include both descriptive and expressive";
  } else {
    std::vector<std::string> skipped;
    for (Task task : {Task::valence, Task::arousal}) {
      const std::string tname(to_string(task));
      std::map<std::string, std::pair<double, int>> expr_sum, desc_sum;
      for (auto seed : config.seeds) {
        const CellResult *ce = nullptr, *cd = nullptr;
        for (const auto& cell : report.cells) {
          if (cell.task != task || cell.seed != seed) continue;
          if (cell.condition == Condition::expressive) ce = &cell;
          if (cell.condition == Condition::descriptive) cd = &cell;
        }
        const auto& xe = ce->regression->squared_errors;
        const auto& xd = cd->regression->squared_errors;
        for (std::size_t i = 0; i < ce->test_keys.size(); ++i) {
          auto& a = expr_sum[ce->test_keys[i]];
          a.first += xe[i];
          ++a.second;
          auto& b = desc_sum[cd->test_keys[i]];
          b.first += xd[i];
          ++b.second;
        }
        WilcoxonRow row;
        row.name = tname + "/seed-" + std::to_string(seed);
        row.target = task;
        row.mse_expressive = ce->regression->mse;
        row.mse_descriptive = cd->regression->mse;
        try {
          row.result = wilcoxon_signed_rank(xe, xd);
          report.wilcoxon.push_back(row);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::too_few_differences) throw StageError("wilcoxon", e);
          skipped.push_back(row.name + " (" + e.what() + ")");
        }
      }
      std::vector<double> xe, xd;
      for (const auto& [k, v] : expr_sum) {
        xe.push_back(v.first / v.second);
        xd.push_back(desc_sum.at(k).first / desc_sum.at(k).second);
      }
      WilcoxonRow row;
      row.name = tname + "/record-mean";
      row.target = task;
      for (double v : xe) row.mse_expressive += v / static_cast<double>(xe.size());
      for (double v : xd) row.mse_descriptive += v / static_cast<double>(xd.size());
      try {
        row.result = wilcoxon_signed_rank(xe, xd);
        report.wilcoxon.push_back(row);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::too_few_differences) throw StageError("wilcoxon", e);
        skipped.push_back(row.name + " (" + e.what() + ")");
      }
    }
    report.wilcoxon_note =
        "x = expressive squared errors, y = descriptive squared errors; Z from the positive "
        "rank sum. record-mean pairs each record's squared errors averaged over the seeds in "
        "which it was in the test split.";
    for (const auto& s : skipped) report.wilcoxon_note += " Skipped: " + s + ".";
  }

  // ------------------------------------------------------------ output
  stage("report", [&] {
    const auto figs = emit_figures(corpus, out, config.figure_participants);
    std::vector<std::string> files{"corpus/corpus.jsonl", "corpus/corpus.clips.csv",
                                   "segments.jsonl", "metrics/metrics.json", "report.json",
                                   "report.md"};
    if (corpus.is_synthetic()) {
      files.push_back("corpus/corpus.gold.jsonl");
      files.push_back("corpus/corpus.provenance.json");
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      for (const auto& m : job_models[j]) {
        files.push_back("models/" + model_file_name(m.task, m.condition, m.meta.seed));
      }
    }
    for (const auto& f : figs) files.push_back(fs::relative(f, out).generic_string());
    std::sort(files.begin(), files.end());
    report.files = files;
    report.generated_at = utc_now();
    write_file_atomic(out / "metrics" / "metrics.json", metrics_json(report));
    write_file_atomic(out / "report.md", report_markdown(report));
    write_file_atomic(out / "report.json", report_json(report));
    return 0;
  });
  return report;
}

// --------------------------------------------------------------- rendering

namespace {

ordered_json classification_json(const ClassificationMetrics& m) {
  ordered_json per = ordered_json::object();
  for (Emotion e : kAllEmotions) {
    const auto& c = m.per_class[index_of(e)];
    per[std::string(to_string(e))] = {{"precision", c.precision}, {"recall", c.recall},
                                      {"f1", c.f1},               {"support", c.support},
                                      {"predicted", c.predicted}, {"in_average", c.in_average}};
  }
  return {{"macro_precision", m.macro_precision}, {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},               {"micro_precision", m.micro_precision},
          {"micro_recall", m.micro_recall},       {"micro_f1", m.micro_f1},
          {"n_examples", m.n_examples},           {"per_class", per}};
}

ordered_json wilcoxon_json(const WilcoxonRow& w) {
  return {{"name", w.name},
          {"target", to_string(w.target)},
          {"z", w.result.z},
          {"p", w.result.p},
          {"n_effective", w.result.n_effective},
          {"rank_sum_positive", w.result.rank_sum_positive},
          {"rank_sum_negative", w.result.rank_sum_negative},
          {"w", w.result.w},
          {"based_on", to_string(w.result.based_on)},
          {"mse_expressive", w.mse_expressive},
          {"mse_descriptive", w.mse_descriptive}};
}

ordered_json metrics_object(const ExperimentReport& r) {
  ordered_json j;
  j["config_hash"] = r.config_hash;
  j["corpus_provenance"] = r.corpus_provenance;
  j["backends"] = {{"llm", r.backend_llm}, {"embed", r.backend_embed}};
  j["dataset"] = {{"n_records", r.dataset.n_records},
                  {"rate_intended_experienced", r.dataset.rate_intended_experienced},
                  {"rate_other_emotions", r.dataset.rate_other_emotions},
                  {"rate_intended_highest", r.dataset.rate_intended_highest},
                  {"alpha", r.dataset.alpha.value},
                  {"alpha_observed_disagreement", r.dataset.alpha.observed_disagreement},
                  {"alpha_expected_disagreement", r.dataset.alpha.expected_disagreement}};
  ordered_json agree = ordered_json::array();
  for (const auto& a : r.segmentation_agreement) {
    agree.push_back({{"pair", a.pair_name},
                     {"descriptive", a.descriptive_mean},
                     {"expressive", a.expressive_mean},
                     {"n_items", a.n_items}});
  }
  j["segmentation_agreement"] = agree;
  j["mean_segment_coverage"] = r.mean_segment_coverage;

  ordered_json summaries = ordered_json::array();
  for (const auto& s : r.summaries) {
    ordered_json m = ordered_json::object();
    for (const auto& [k, v] : s.metrics) m[k] = {{"mean", v.mean}, {"std", v.std}};
    summaries.push_back(
        {{"task", to_string(s.task)}, {"condition", to_string(s.condition)}, {"metrics", m}});
  }
  j["summaries"] = summaries;

  ordered_json cmp = ordered_json::array();
  for (const auto& c : r.comparisons) {
    cmp.push_back({{"task", to_string(c.task)},
                   {"metric", c.task == Task::intended || c.task == Task::evoked ? "macro_f1"
                                                                                 : "mse"},
                   {"descriptive", c.descriptive_mean},
                   {"expressive", c.expressive_mean},
                   {"descriptive_minus_expressive", c.descriptive_minus_expressive}});
  }
  j["comparisons"] = cmp;
  ordered_json wil = ordered_json::array();
  for (const auto& w : r.wilcoxon) wil.push_back(wilcoxon_json(w));
  j["wilcoxon"] = wil;
  j["wilcoxon_note"] = r.wilcoxon_note;
  j["isolation"] = {{"checked", r.isolation.checked},
                    {"passed", r.isolation.passed},
                    {"fingerprints_match", r.isolation.fingerprints_match},
                    {"leaked_tokens", r.isolation.leaked_tokens},
                    {"note", r.isolation.note}};

  ordered_json cells = ordered_json::array();
  for (const auto& c : r.cells) {
    ordered_json cell = {{"task", to_string(c.task)},
                         {"condition", to_string(c.condition)},
                         {"seed", c.seed},
                         {"n_test", c.test_keys.size()},
                         {"vocabulary_size", c.vocabulary_size},
                         {"epochs", c.meta.epochs},
                         {"final_loss", c.meta.final_loss},
                         {"input_fingerprint", text::hex64(c.meta.input_fingerprint)}};
    if (c.classification) {
      cell["metrics"] = classification_json(*c.classification);
    } else {
      cell["metrics"] = {{"mse", c.regression->mse}, {"mae", c.regression->mae}};
    }
    cells.push_back(std::move(cell));
  }
  j["cells"] = cells;
  j["warnings"] = r.warnings;
  return j;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pct(double v) { return fixed(100.0 * v, 2) + "%"; }

std::string cap(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string pm(const CellSummary* s, const std::string& key) {
  if (!s || !s->metrics.contains(key)) return "-";
  const auto& m = s->metrics.at(key);
  return fixed(m.mean) + " ± " + fixed(m.std);
}

}  // namespace

std::string metrics_json(const ExperimentReport& report) {
  return metrics_object(report).dump(2) + "\n";
}

std::string report_json(const ExperimentReport& report) {
  ordered_json j = metrics_object(report);
  j["files"] = report.files;
  j["generated_at"] = report.generated_at;
  return j.dump(2) + "\n";
}

std::string report_markdown(const ExperimentReport& r) {
  std::ostringstream md;
  md << "# Experiment report\n\n";
  md << "- config hash: `" << r.config_hash << "`\n";
  md << "- corpus: `" << r.corpus_provenance << "` (" << r.dataset.n_records << " records)\n";
  md << "- segmenter: `" << r.backend_llm << "`, embedder: `" << r.backend_embed << "`\n";
  if (!r.generated_at.empty()) md << "- generated: " << r.generated_at << "\n";

  md << "\n## Intended vs evoked emotions\n\n| | |\n|---|---|\n";
  md << "| How often do participants experience the intended emotion conveyed by the videos? | "
     << pct(r.dataset.rate_intended_experienced) << " |\n";
  md << "| How frequently do participants feel emotions other than the intended one? | "
     << pct(r.dataset.rate_other_emotions) << " |\n";
  md << "| How often is the intended emotion rated as the highest by participants? | "
     << pct(r.dataset.rate_intended_highest) << " |\n";
  md << "| Krippendorff's alpha coefficient between intended emotion and evoked emotions | "
     << fixed(r.dataset.alpha.value, 4) << " |\n";

  md << "\n## Segmentation agreement\n\n| | Descriptive semantics | Expressive semantics |\n"
        "|---|---|---|\n";
  for (const auto& a : r.segmentation_agreement) {
    md << "| " << a.pair_name << " | " << fixed(a.descriptive_mean, 2) << " | "
       << fixed(a.expressive_mean, 2) << " |\n";
  }
  md << "\nMean segment coverage: " << fixed(r.mean_segment_coverage, 4) << "\n";

  auto cls_table = [&](Task task, const char* title) {
    md << "\n## " << title << "\n\n| Semantics | Precision | Recall | F1 |\n|---|---|---|---|\n";
    for (const auto& s : r.summaries) {
      if (s.task != task) continue;
      md << "| " << cap(to_string(s.condition)) << " | " << pm(&s, "macro_precision") << " | "
         << pm(&s, "macro_recall") << " | " << pm(&s, "macro_f1") << " |\n";
    }
  };
  cls_table(Task::intended, "Intended emotion (macro, mean ± std over seeds)");
  cls_table(Task::evoked, "Evoked emotions (macro, mean ± std over seeds)");

  md << "\n## Valence and arousal\n\n"
        "| Semantics | Valence MSE | Valence MAE | Arousal MSE | Arousal MAE |\n"
        "|---|---|---|---|---|\n";
  std::vector<Condition> conds;
  for (const auto& s : r.summaries) {
    if (s.task == Task::valence) conds.push_back(s.condition);
  }
  for (auto c : conds) {
    const auto* v = r.summary(Task::valence, c);
    const auto* a = r.summary(Task::arousal, c);
    md << "| " << cap(to_string(c)) << " | " << pm(v, "mse") << " | " << pm(v, "mae") << " | "
       << pm(a, "mse") << " | " << pm(a, "mae") << " |\n";
  }

  md << "\n## Wilcoxon signed-rank tests (expressive vs descriptive squared errors)\n\n";
  if (r.wilcoxon.empty()) {
    md << r.wilcoxon_note << "\n";
  } else {
    md << "| Comparison | n | Z | p | W | Based on |\n|---|---|---|---|---|---|\n";
    for (const auto& w : r.wilcoxon) {
      md << "| " << w.name << " | " << w.result.n_effective << " | " << fixed(w.result.z, 2)
         << " | " << (w.result.p < 0.001 ? std::string("<0.001") : fixed(w.result.p, 3)) << " | "
         << fixed(w.result.w, 1) << " | " << to_string(w.result.based_on) << " ranks |\n";
    }
    md << "\n" << r.wilcoxon_note << "\n";
  }

  md << "\n## Condition isolation\n\n"
     << (r.isolation.passed ? "passed" : "FAILED") << ": " << r.isolation.note << "\n";
  if (!r.isolation.leaked_tokens.empty()) {
    md << "Leaked tokens: " << text::join(r.isolation.leaked_tokens, ", ") << "\n";
  }
  if (!r.warnings.empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : r.warnings) md << "- " << w << "\n";
  }
  return md.str();
}

std::vector<fs::path> emit_figures(const Corpus& corpus, const fs::path& out_dir,
                                   int n_participants) {
  std::vector<fs::path> written;
  const fs::path dir = out_dir / "figures";
  fs::create_directories(dir);
  const auto pids = corpus.participants();
  const std::size_t n =
      std::min(pids.size(), static_cast<std::size_t>(std::max(n_participants, 0)));
  for (std::size_t k = 0; k < n; ++k) {
    std::ostringstream csv;
    csv << "participant_id,clip_position,clip_id,emotion,rating,is_intended\n";
    int pos = 0;
    for (const auto& r : corpus.records) {
      if (r.participant_id != pids[k]) continue;
      ++pos;
      for (Emotion e : kAllEmotions) {
        csv << r.participant_id << ',' << pos << ',' << r.clip_id << ',' << to_string(e) << ','
            << r.rating(e) << ',' << (e == r.intended ? 1 : 0) << '\n';
      }
    }
    const auto path = dir / ("fig2_" + pids[k] + ".csv");
    write_file_atomic(path, csv.str());
    written.push_back(path);
  }
  std::ostringstream csv;
  csv << "participant_id,clip_id,intended,valence,arousal\n";
  for (const auto& r : corpus.records) {
    csv << r.participant_id << ',' << r.clip_id << ',' << to_string(r.intended) << ','
        << fixed(r.valence, 4) << ',' << fixed(r.arousal, 4) << '\n';
  }
  const auto path = dir / "fig3_valence_arousal.csv";
  write_file_atomic(path, csv.str());
  written.push_back(path);
  return written;
}

}  // namespace emosem
