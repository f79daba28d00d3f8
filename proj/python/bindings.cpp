#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "emosem/agreement.hpp"
#include "emosem/backends.hpp"
#include "emosem/cli.hpp"
#include "emosem/corpus.hpp"
#include "emosem/error.hpp"
#include "emosem/experiment.hpp"
#include "emosem/segmenter.hpp"
#include "emosem/stats.hpp"
#include "emosem/synth.hpp"

namespace py = pybind11;
using namespace emosem;

namespace {

LabelSet to_labels(const std::vector<std::string>& names) {
  LabelSet s;
  for (const auto& n : names) s.insert(emotion_from_string(n));
  return s;
}

std::vector<std::string> from_labels(LabelSet s) {
  std::vector<std::string> out;
  for (Emotion e : s.members()) out.emplace_back(to_string(e));
  return out;
}

py::dict segmented_dict(const SegmentedTranscript& s) {
  py::dict d;
  d["descriptive"] = s.descriptive;
  d["expressive"] = s.expressive;
  d["coverage"] = s.coverage ? py::cast(*s.coverage) : py::none();
  d["source"] = std::string(to_string(s.source));
  return d;
}

py::dict wilcoxon_dict(const WilcoxonResult& r) {
  py::dict d;
  d["z"] = r.z;
  d["p"] = r.p;
  d["n_effective"] = r.n_effective;
  d["rank_sum_positive"] = r.rank_sum_positive;
  d["rank_sum_negative"] = r.rank_sum_negative;
  d["w"] = r.w;
  d["based_on"] = std::string(to_string(r.based_on));
  d["tie_correction"] = r.tie_correction;
  return d;
}

SynthConfig synth_config(int n_participants, double descriptive_signal, double expressive_signal,
                         double evoked_noise, std::uint64_t seed) {
  SynthConfig c;
  c.n_participants = n_participants;
  c.descriptive_signal = descriptive_signal;
  c.expressive_signal = expressive_signal;
  c.evoked_noise = evoked_noise;
  c.seed = seed;
  validate(c);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core routines of the emosem toolkit";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&] { return py::exception<emosem::Error>(m, "EmosemError", PyExc_ValueError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const emosem::Error& e) {
      py::tuple args = py::make_tuple(std::string(to_string(e.code())), std::string(e.what()));
      PyErr_SetObject(error_type.get_stored().ptr(), args.ptr());
    }
  });

  m.def("emotions", [] {
    std::vector<std::string> out;
    for (Emotion e : kAllEmotions) out.emplace_back(to_string(e));
    return out;
  });

  m.def(
      "masi_distance",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        return masi_distance(to_labels(a), to_labels(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "krippendorff_alpha",
      [](const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& items) {
        std::vector<std::pair<LabelSet, LabelSet>> pairs;
        for (const auto& [a, b] : items) pairs.emplace_back(to_labels(a), to_labels(b));
        const auto r = krippendorff_alpha(pairs);
        py::dict d;
        d["value"] = r.value;
        d["observed_disagreement"] = r.observed_disagreement;
        d["expected_disagreement"] = r.expected_disagreement;
        d["n_items"] = r.n_items;
        return d;
      },
      py::arg("items"), "MASI-distance alpha over (coder A, coder B) label lists.");

  m.def("cosine_similarity",
        [](const std::vector<double>& u, const std::vector<double>& v) { return cosine_similarity(u, v); },
        py::arg("u"), py::arg("v"));

  m.def("word_error_rate", [](const std::string& h, const std::string& r) { return word_error_rate(h, r); },
        py::arg("hypothesis"), py::arg("reference"));

  m.def("normal_cdf", &normal_cdf, py::arg("z"));

  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& x, const std::vector<double>& y, std::size_t min_nonzero) {
        return wilcoxon_dict(wilcoxon_signed_rank(x, y, min_nonzero));
      },
      py::arg("x"), py::arg("y"), py::arg("min_nonzero") = kMinWilcoxonPairs);

  m.def("build_prompt", [](const std::string& t) { return build_prompt(t); }, py::arg("transcript"));
  m.def("parse_segmentation", [](const std::string& c) { return segmented_dict(parse_segmentation(c)); },
        py::arg("completion"));
  m.def("rule_based_segment", [](const std::string& t) { return segmented_dict(rule_based_segment(t)); },
        py::arg("transcript"));
  m.def(
      "coverage_check",
      [](const std::string& t, const std::string& descriptive, const std::string& expressive) {
        return coverage_check(t, SegmentedTranscript{descriptive, expressive, {}, SegmentSource::llm});
      },
      py::arg("transcript"), py::arg("descriptive"), py::arg("expressive"));

  m.def(
      "synthesize_corpus",
      [](const std::filesystem::path& out, int n_participants, double descriptive_signal,
         double expressive_signal, double evoked_noise, std::uint64_t seed) {
        const auto c = synthesize_corpus(
            synth_config(n_participants, descriptive_signal, expressive_signal, evoked_noise, seed));
        write_corpus(c, out);
        return c.records.size();
      },
      py::arg("out"), py::arg("n_participants") = 30, py::arg("descriptive_signal") = 0.9,
      py::arg("expressive_signal") = 0.9, py::arg("evoked_noise") = 0.5, py::arg("seed") = 42,
      "Writes a synthetic corpus and its sidecars; returns the record count.");

  m.def(
      "load_records",
      [](const std::filesystem::path& path) {
        const auto c = load_corpus(path);
        py::list out;
        for (const auto& r : c.records) {
          py::dict d;
          d["participant_id"] = r.participant_id;
          d["clip_id"] = r.clip_id;
          d["transcript"] = r.transcript ? py::cast(*r.transcript) : py::none();
          d["intended"] = std::string(to_string(r.intended));
          py::dict evoked;
          for (Emotion e : kAllEmotions) evoked[py::str(std::string(to_string(e)))] = r.rating(e);
          d["evoked"] = evoked;
          d["valence"] = r.valence;
          d["arousal"] = r.arousal;
          out.append(d);
        }
        return out;
      },
      py::arg("path"));

  m.def(
      "dataset_stats",
      [](const std::filesystem::path& path, int threshold, bool strict) {
        const auto s = dataset_stats(load_corpus(path), threshold,
                                     strict ? HighestTieRule::strict : HighestTieRule::favor_intended);
        py::dict d;
        d["n_records"] = s.n_records;
        d["rate_intended_experienced"] = s.rate_intended_experienced;
        d["rate_other_emotions"] = s.rate_other_emotions;
        d["rate_intended_highest"] = s.rate_intended_highest;
        d["alpha"] = s.alpha.value;
        return d;
      },
      py::arg("corpus"), py::arg("threshold") = kDefaultEvokedThreshold, py::arg("strict") = false);

  m.def(
      "binarize_evoked",
      [](const std::vector<int>& ratings, int threshold) {
        if (ratings.size() != kNumEmotions) {
          throw emosem::Error(emosem::ErrorCode::shape_mismatch, "expected 6 ratings, got " + std::to_string(ratings.size()));
        }
        RatingVector v{};
        std::copy(ratings.begin(), ratings.end(), v.begin());
        return from_labels(binarize_evoked(v, threshold));
      },
      py::arg("ratings"), py::arg("threshold") = kDefaultEvokedThreshold);

  m.def(
      "run_experiment_json",
      [](const std::optional<std::filesystem::path>& config, const std::filesystem::path& output_dir) {
        ExperimentConfig c = config ? load_experiment_config(*config) : ExperimentConfig{};
        c.output_dir = output_dir;
        validate(c);
        py::gil_scoped_release release;
        return metrics_json(run(c));
      },
      py::arg("config") = py::none(), py::arg("output_dir") = "emosem_out",
      "Runs the full experiment and returns the metrics JSON text.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool in-process; returns (exit_code, stdout, stderr).");
}
