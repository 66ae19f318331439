#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "reformguard/attacksim.hpp"
#include "reformguard/corpus.hpp"
#include "reformguard/distill.hpp"
#include "reformguard/ensemble.hpp"
#include "reformguard/gateway.hpp"
#include "reformguard/metrics.hpp"
#include "reformguard/reformulate.hpp"

namespace py = pybind11;
using namespace reformguard;

namespace {

/// Backend, classifier and engine built from a config document.
class Defense {
 public:
  explicit Defense(const std::string& config_json)
      : config_(gateway::DefenseConfig::from_json_text(config_json)),
        backend_(gateway::make_backend(config_.backend)),
        classifier_(gateway::make_classifier(config_.classifier)),
        engine_(*backend_, config_.backend.params, config_.batch_cap) {}

  std::vector<VoteResult> classify(const std::vector<std::string>& texts) const {
    py::gil_scoped_release release;
    return defend_batch(texts, engine_, *classifier_, config_.policy);
  }

  ReformOutcome reformulate(Task task, const std::vector<std::string>& sentences) const {
    py::gil_scoped_release release;
    return engine_.run(task, sentences);
  }

 private:
  gateway::DefenseConfig config_;
  std::unique_ptr<LlmBackend> backend_;
  std::unique_ptr<ClassifierOracle> classifier_;
  Reformulator engine_;
};

}  // namespace

PYBIND11_MODULE(_reformguard, m) {
  m.doc() = "Reformulation-based defense against textual adversarial and backdoor attacks";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<CountMismatchError>(m, "CountMismatchError", error.ptr());
  py::register_exception<ReformulationError>(m, "ReformulationError", error.ptr());
  py::register_exception<ClassifierError>(m, "ClassifierError", error.ptr());
  py::register_exception<BackendError>(m, "BackendError", error.ptr());
  py::register_exception<DatasetError>(m, "DatasetError", error.ptr());
  py::register_exception<gateway::ConfigError>(m, "ConfigError", error.ptr());

  py::enum_<Task>(m, "Task")
      .value("paraphrase", Task::paraphrase)
      .value("summarize", Task::summarize)
      .value("back_translate", Task::back_translate);

  py::enum_<AttackTag>(m, "AttackTag")
      .value("clean", AttackTag::clean)
      .value("badnets", AttackTag::badnets)
      .value("addsent", AttackTag::addsent)
      .value("stylebkd", AttackTag::stylebkd)
      .value("synbkd", AttackTag::synbkd)
      .value("deepwordbug_like", AttackTag::deepwordbug_like)
      .value("pwws_like", AttackTag::pwws_like)
      .value("textbugger_like", AttackTag::textbugger_like)
      .value("textfooler_like", AttackTag::textfooler_like);

  // corpus
  py::class_<Sample>(m, "Sample")
      .def(py::init([](std::string id, std::string text, std::optional<ClassId> label) {
             return Sample{std::move(id), std::move(text), label, AttackTag::clean, {}, {}, {}};
           }),
           py::arg("id"), py::arg("text"), py::arg("label") = std::nullopt)
      .def_readwrite("id", &Sample::id)
      .def_readwrite("text", &Sample::text)
      .def_readwrite("label", &Sample::label)
      .def_readwrite("attack_tag", &Sample::attack_tag)
      .def_readwrite("original_id", &Sample::original_id)
      .def_readwrite("trigger_position", &Sample::trigger_position)
      .def_readwrite("original_label", &Sample::original_label)
      .def("true_label", &Sample::true_label)
      .def(py::self == py::self)
      .def("__repr__", [](const Sample& s) { return "<Sample " + s.id + ">"; });

  py::class_<LabeledDataset>(m, "LabeledDataset")
      .def(py::init<>())
      .def_readwrite("name", &LabeledDataset::name)
      .def_readwrite("samples", &LabeledDataset::samples)
      .def_readwrite("num_classes", &LabeledDataset::num_classes)
      .def_readwrite("label_names", &LabeledDataset::label_names)
      .def("__len__", &LabeledDataset::size);

  m.def("load_jsonl", &load_jsonl, py::arg("path"));
  m.def("save_jsonl", &save_jsonl, py::arg("dataset"), py::arg("path"));

  // attacksim
  py::class_<attacksim::TriggerSpec>(m, "TriggerSpec")
      .def_static("word", &attacksim::TriggerSpec::word, py::arg("trigger"), py::arg("target"))
      .def_static("sentence", &attacksim::TriggerSpec::sentence, py::arg("trigger"),
                  py::arg("target"))
      .def_readonly("trigger_text", &attacksim::TriggerSpec::trigger_text)
      .def_readonly("target_label", &attacksim::TriggerSpec::target_label);

  m.def(
      "inject_word_trigger",
      [](const Sample& s, const attacksim::TriggerSpec& spec, std::optional<std::size_t> position,
         std::uint64_t seed) {
        Rng rng(seed);
        return attacksim::inject_word_trigger(s, spec, position, rng);
      },
      py::arg("sample"), py::arg("spec"), py::arg("position") = std::nullopt, py::arg("seed") = 0);
  m.def("remove_word_trigger", &attacksim::remove_word_trigger, py::arg("sample"), py::arg("spec"));
  m.def(
      "poison_dataset",
      [](const LabeledDataset& d, const attacksim::TriggerSpec& spec, double rate,
         std::uint64_t seed) {
        Rng rng(seed);
        return attacksim::poison_dataset(d, spec, rate, rng);
      },
      py::arg("dataset"), py::arg("spec"), py::arg("rate") = attacksim::kDefaultPoisonRate,
      py::arg("seed") = 0);
  m.def("sem_sim", &attacksim::sem_sim, py::arg("a"), py::arg("b"));
  m.def("char_edit_candidates", &attacksim::char_edit_candidates, py::arg("word"));

  // reformulate
  m.attr("DELIMITER") = std::string(kDelimiter);
  m.def("sanitize", &sanitize, py::arg("text"));
  m.def(
      "render_prompt",
      [](Task task, const std::vector<std::string>& sentences) {
        return render_prompt(PromptTemplate::builtin(task), sentences);
      },
      py::arg("task"), py::arg("sentences"));
  m.def("split_batch_response", &split_batch_response, py::arg("response"),
        py::arg("expected_n"));

  py::class_<ReformOutcome>(m, "ReformOutcome")
      .def_readonly("task", &ReformOutcome::task)
      .def_readonly("inputs", &ReformOutcome::inputs)
      .def_readonly("outputs", &ReformOutcome::outputs)
      .def_readonly("fallback_used", &ReformOutcome::fallback_used)
      .def_readonly("per_item_errors", &ReformOutcome::per_item_errors);

  // ensemble
  py::class_<ModuleVerdict>(m, "ModuleVerdict")
      .def(py::init([](Task task, ClassId label) {
             ModuleVerdict v;
             v.task = task;
             v.label = label;
             return v;
           }),
           py::arg("task"), py::arg("label"))
      .def_readonly("task", &ModuleVerdict::task)
      .def_readonly("label", &ModuleVerdict::label)
      .def_readonly("reformulated_text", &ModuleVerdict::reformulated_text)
      .def_readonly("passthrough", &ModuleVerdict::passthrough);

  py::class_<VoteResult>(m, "VoteResult")
      .def_readonly("final_label", &VoteResult::final_label)
      .def_readonly("verdicts", &VoteResult::verdicts)
      .def_readonly("tie", &VoteResult::tie)
      .def_readonly("tiebreak_applied", &VoteResult::tiebreak_applied);

  m.def(
      "vote",
      [](const std::vector<ModuleVerdict>& verdicts, std::optional<std::vector<Task>> order) {
        return vote(verdicts, order ? *order : default_tiebreak_order());
      },
      py::arg("verdicts"), py::arg("tiebreak_order") = std::nullopt);

  py::class_<Defense>(m, "Defense")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def("classify", &Defense::classify, py::arg("texts"))
      .def("reformulate", &Defense::reformulate, py::arg("task"), py::arg("sentences"));

  // distill
  m.def(
      "temperature_softmax",
      [](const std::vector<double>& logits, double t) {
        return distill::temperature_softmax(logits, t);
      },
      py::arg("logits"), py::arg("temperature") = 1.0);
  m.def(
      "hard_label_loss",
      [](const distill::Sequence& probs, const std::vector<std::size_t>& targets) {
        return distill::hard_label_loss(probs, targets);
      },
      py::arg("student_probs"), py::arg("targets"));
  m.def("soft_label_loss", &distill::soft_label_loss, py::arg("teacher_logits"),
        py::arg("student_logits"), py::arg("temperature") = distill::kDefaultTemperature);
  m.def("combined_loss", &distill::combined_loss, py::arg("soft"), py::arg("hard"),
        py::arg("alpha") = distill::kDefaultAlpha);

  // metrics
  py::enum_<metrics::Condition>(m, "Condition")
      .value("clean", metrics::Condition::clean)
      .value("attacked", metrics::Condition::attacked)
      .value("defended_clean", metrics::Condition::defended_clean)
      .value("defended_attacked", metrics::Condition::defended_attacked);

  py::class_<metrics::PredictionRecord>(m, "PredictionRecord")
      .def(py::init([](std::string id, ClassId truth, ClassId predicted, metrics::Condition c,
                       AttackTag tag, std::optional<ClassId> target) {
             return metrics::PredictionRecord{std::move(id), truth, predicted, c, tag, target};
           }),
           py::arg("sample_id"), py::arg("true_label"), py::arg("predicted_label"),
           py::arg("condition") = metrics::Condition::clean, py::arg("attack_tag") = AttackTag::clean,
           py::arg("target_label") = std::nullopt)
      .def_readwrite("sample_id", &metrics::PredictionRecord::sample_id)
      .def_readwrite("true_label", &metrics::PredictionRecord::true_label)
      .def_readwrite("predicted_label", &metrics::PredictionRecord::predicted_label)
      .def_readwrite("condition", &metrics::PredictionRecord::condition)
      .def_readwrite("attack_tag", &metrics::PredictionRecord::attack_tag)
      .def_readwrite("target_label", &metrics::PredictionRecord::target_label);

  py::class_<metrics::EvalReport>(m, "EvalReport")
      .def_readonly("acc", &metrics::EvalReport::acc)
      .def_readonly("acc_a", &metrics::EvalReport::acc_a)
      .def_readonly("acc_d", &metrics::EvalReport::acc_d)
      .def_readonly("acc_ad", &metrics::EvalReport::acc_ad)
      .def_readonly("asr", &metrics::EvalReport::asr)
      .def_readonly("asr_d", &metrics::EvalReport::asr_d)
      .def_readonly("delta_acc", &metrics::EvalReport::delta_acc)
      .def_readonly("delta_asr", &metrics::EvalReport::delta_asr)
      .def_readonly("delta_acc_clean", &metrics::EvalReport::delta_acc_clean);

  m.def("accuracy", [](const std::vector<metrics::PredictionRecord>& r) {
    return metrics::accuracy(r);
  }, py::arg("records"));
  m.def("attack_success_rate", [](const std::vector<metrics::PredictionRecord>& r, ClassId target) {
    return metrics::attack_success_rate(r, target);
  }, py::arg("records"), py::arg("target"));
  m.def("build_report", [](const std::vector<metrics::PredictionRecord>& r,
                           std::optional<ClassId> target) {
    return metrics::build_report(r, target);
  }, py::arg("records"), py::arg("target") = std::nullopt);
  m.def("render_table",
        [](const std::vector<std::pair<std::string, metrics::EvalReport>>& rows) {
          return metrics::render_table(rows);
        },
        py::arg("rows"));
  m.def("format_delta", &metrics::format_delta, py::arg("value"));
}
