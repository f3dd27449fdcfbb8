// Python bindings: scenario generation, the LP oracle, training and
// evaluation. Matrices cross the boundary as NumPy arrays.

#include "permnet/bench.hpp"
#include "permnet/edf.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace permnet;

namespace {

py::dict report_dict(const GapReport& r) {
  py::dict d;
  d["gap"] = r.gap;
  d["raw_gap"] = r.raw_gap;
  d["mean_capacity_violation"] = r.mean_capacity_violation;
  d["max_capacity_violation"] = r.max_capacity_violation;
  d["mean_qos_residual"] = r.mean_qos_residual;
  d["learned_mass"] = r.learned_mass;
  d["optimal_mass"] = r.optimal_mass;
  d["users_short"] = r.users_short;
  d["scenarios"] = r.scenarios;
  return d;
}

}  // namespace

PYBIND11_MODULE(_permnet, m) {
  m.doc() = "Permutation-equivariant transmission planning";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_static("from_text",
                  [](const std::string& text) {
                    auto cfg = NetworkConfig::from_config(ConfigMap::parse(text));
                    return cfg;
                  })
      .def_readwrite("num_bs", &NetworkConfig::num_bs)
      .def_readwrite("k_max", &NetworkConfig::k_max)
      .def_readwrite("frames", &NetworkConfig::frames)
      .def_readwrite("cell_radius_m", &NetworkConfig::cell_radius_m)
      .def_readwrite("num_tx", &NetworkConfig::num_tx)
      .def_readwrite("frame_s", &NetworkConfig::frame_s)
      .def_readwrite("file_bits_min", &NetworkConfig::file_bits_min)
      .def_readwrite("file_bits_max", &NetworkConfig::file_bits_max)
      .def_readwrite("rayleigh_fading", &NetworkConfig::rayleigh_fading)
      .def("validate", &NetworkConfig::validate);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("seed", &Scenario::seed)
      .def_readonly("num_users", &Scenario::num_users)
      .def_readonly("k_max", &Scenario::k_max)
      .def_readonly("frames", &Scenario::frames)
      .def_readonly("num_bs", &Scenario::num_bs)
      .def_readonly("file_bits", &Scenario::file_bits)
      .def_readonly("gain", &Scenario::gain)
      .def_readonly("bandwidth", &Scenario::bandwidth)
      .def_readonly("association", &Scenario::association)
      .def_readonly("rate", &Scenario::rate)
      .def_readonly("norm_rate", &Scenario::norm_rate)
      .def_readonly("masks", &Scenario::masks);

  py::class_<PlanSolution>(m, "PlanSolution")
      .def_readonly("plan", &PlanSolution::plan)
      .def_readonly("objective", &PlanSolution::objective)
      .def_property_readonly("status",
                             [](const PlanSolution& s) { return to_string(s.status); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("s_hidden_per_block", &TrainConfig::s_hidden_per_block)
      .def_readwrite("lambda_hidden", &TrainConfig::lambda_hidden)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("sharing", &TrainConfig::sharing)
      .def_readwrite("frames", &TrainConfig::frames)
      .def_readwrite("k_max", &TrainConfig::k_max)
      .def_readwrite("num_bs", &TrainConfig::num_bs)
      .def_property(
          "supervised",
          [](const TrainConfig& c) { return c.mode == Supervision::Supervised; },
          [](TrainConfig& c, bool v) {
            c.mode = v ? Supervision::Supervised : Supervision::Unsupervised;
          });

  py::class_<TrainState>(m, "TrainState")
      .def_readonly("epoch", &TrainState::epoch)
      .def_readonly("loss_history", &TrainState::loss_history)
      .def_property_readonly("parameter_count",
                             [](const TrainState& s) { return s.dnn_s.parameter_count(); });

  m.def("pathloss_db", &pathloss_db, py::arg("distance_m"), py::arg("config"));
  m.def("avg_rate", &avg_rate, py::arg("gain"), py::arg("bandwidth_hz"), py::arg("config"));

  m.def(
      "generate_scenarios",
      [](const NetworkConfig& net, int count, std::uint64_t seed, bool test) {
        return generate_scenarios(net, count, seed,
                                  test ? Stream::TestScenario : Stream::Scenario, test);
      },
      py::arg("config"), py::arg("count"), py::arg("seed"), py::arg("test") = false,
      "Feasible scenarios; test sets draw the user count uniformly in [1, k_max].");
  m.def("solve_plan", [](const Scenario& sc) { return solve_plan(sc); }, py::arg("scenario"));
  m.def("repair_plan",
        [](const Matrix& plan, const Scenario& sc) {
          const auto r = repair_plan(plan, sc);
          return py::make_tuple(r.plan, r.overflow);
        },
        py::arg("plan"), py::arg("scenario"));

  m.def(
      "train",
      [](const std::vector<Scenario>& data, const TrainConfig& cfg,
         const std::vector<Matrix>& labels) {
        py::gil_scoped_release release;
        return train(data, cfg, labels);
      },
      py::arg("scenarios"), py::arg("config"), py::arg("labels") = std::vector<Matrix>{});
  m.def("predict_plan", &predict_plan, py::arg("state"), py::arg("scenario"));
  m.def(
      "evaluate_gap",
      [](const TrainState& st, const std::vector<Scenario>& scs,
         const std::vector<PlanSolution>& oracle) {
        return report_dict(evaluate_gap(st, scs, oracle));
      },
      py::arg("state"), py::arg("scenarios"), py::arg("oracle"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("state"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"), py::arg("config"));

  m.def(
      "edf_schedule",
      [](const Scenario& sc, const NetworkConfig& net, std::uint64_t seed, std::uint64_t index) {
        Rng rng = substream(seed, Stream::Fading, index);
        const auto out = edf_schedule(sc, rng, net);
        return py::make_tuple(out.time_s, out.completed);
      },
      py::arg("scenario"), py::arg("config"), py::arg("seed"), py::arg("index") = 0,
      "Per-user completion times (s) and completion flags.");
}
