// Python bindings for the streamgp core: kernels, the dense and sparse
// models, the streaming update, field synthesis, and the experiment
// driver. Matrices cross the boundary as numpy arrays via Eigen.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "streamgp/exact_gp.hpp"
#include "streamgp/experiment.hpp"
#include "streamgp/field.hpp"
#include "streamgp/kernel.hpp"
#include "streamgp/metrics.hpp"
#include "streamgp/optimizer.hpp"
#include "streamgp/rng.hpp"
#include "streamgp/sparse_gp.hpp"
#include "streamgp/streaming_gp.hpp"
#include "streamgp/types.hpp"

namespace py = pybind11;
using namespace streamgp;

namespace {

// Python objectives return (value, gradient); adapt them to the C++
// callback shape minimize() expects.
ObjectiveFn wrap_objective(const py::function& fn) {
  return [fn](const Vector& x, Vector& grad) {
    const py::tuple out = fn(x).cast<py::tuple>();
    if (out.size() != 2) {
      throw std::invalid_argument("objective must return (value, gradient)");
    }
    grad = out[1].cast<Vector>();
    return out[0].cast<double>();
  };
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Streaming sparse Gaussian process regression toolkit";

  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<Hyperparameters>(m, "Hyperparameters")
      .def(py::init<>())
      .def_static("from_values", &Hyperparameters::from_values,
                  py::arg("signal_variance"), py::arg("lengthscales"),
                  py::arg("noise_variance"))
      .def_readwrite("log_signal_variance",
                     &Hyperparameters::log_signal_variance)
      .def_readwrite("log_lengthscales", &Hyperparameters::log_lengthscales)
      .def_readwrite("log_noise_variance", &Hyperparameters::log_noise_variance)
      .def_property_readonly("signal_variance",
                             &Hyperparameters::signal_variance)
      .def_property_readonly("lengthscales", &Hyperparameters::lengthscales)
      .def_property_readonly("noise_variance", &Hyperparameters::noise_variance)
      .def("to_vector", &Hyperparameters::to_vector)
      .def_static("from_vector", &Hyperparameters::from_vector)
      .def("__repr__", [](const Hyperparameters& hp) {
        std::string ell = "[";
        const Vector v = hp.lengthscales();
        for (Index i = 0; i < v.size(); ++i) {
          if (i) ell += ", ";
          ell += std::to_string(v(i));
        }
        ell += "]";
        return "Hyperparameters(signal_variance=" +
               std::to_string(hp.signal_variance()) + ", lengthscales=" + ell +
               ", noise_variance=" + std::to_string(hp.noise_variance()) + ")";
      });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def(py::init<Matrix, Vector>(), py::arg("inputs"), py::arg("targets"))
      .def_readwrite("inputs", &Dataset::inputs)
      .def_readwrite("targets", &Dataset::targets)
      .def("__len__", &Dataset::size)
      .def_static("concat", &Dataset::concat);

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("mean", &Prediction::mean)
      .def_readonly("variance_f", &Prediction::variance_f)
      .def_readonly("variance_y", &Prediction::variance_y);

  py::class_<Objective>(m, "Objective")
      .def_readonly("value", &Objective::value)
      .def_readonly("gradient", &Objective::gradient);

  py::class_<NormalRng>(m, "NormalRng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &NormalRng::uniform)
      .def("normal", &NormalRng::normal);

  // Kernel
  m.def("kernel_matrix", &kernel_matrix, py::arg("x1"), py::arg("x2"),
        py::arg("hp"));
  m.def("kernel_diag", &kernel_diag, py::arg("x"), py::arg("hp"));

  // Dense GP
  m.def("gpr_log_marginal_likelihood", &gpr_log_marginal_likelihood,
        py::arg("data"), py::arg("hp"));
  m.def("gpr_predict", &gpr_predict, py::arg("data"), py::arg("hp"),
        py::arg("queries"));
  m.def("gpr_window_update", &gpr_window_update, py::arg("state"),
        py::arg("batch"), py::arg("window") = 500);

  // Sparse batch models
  py::class_<SparseState>(m, "SparseState")
      .def(py::init<>())
      .def_readwrite("pseudo_inputs", &SparseState::pseudo_inputs)
      .def_readwrite("q_mean", &SparseState::q_mean)
      .def_readwrite("q_cov", &SparseState::q_cov)
      .def_readwrite("hp_snapshot", &SparseState::hp_snapshot)
      .def_property_readonly("pseudo_count", &SparseState::pseudo_count);

  m.def("pack_params", &pack_params, py::arg("hp"), py::arg("z"));
  m.def(
      "unpack_params",
      [](const Vector& v, Index mm, Index d) {
        Hyperparameters hp;
        Matrix z;
        unpack_params(v, mm, d, hp, z);
        return py::make_tuple(hp, z);
      },
      py::arg("v"), py::arg("m"), py::arg("d"));
  m.def("vsgp_elbo", &vsgp_elbo, py::arg("data"), py::arg("z"), py::arg("hp"));
  m.def("vsgp_optimal_q", &vsgp_optimal_q, py::arg("data"), py::arg("z"),
        py::arg("hp"));
  m.def("spgp_log_marginal_likelihood", &spgp_log_marginal_likelihood,
        py::arg("data"), py::arg("z"), py::arg("hp"));
  m.def("spgp_fit_state", &spgp_fit_state, py::arg("data"), py::arg("z"),
        py::arg("hp"));
  m.def("sparse_predict", &sparse_predict, py::arg("state"), py::arg("hp"),
        py::arg("queries"));

  // Optimizer
  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &OptimizerConfig::max_iterations)
      .def_readwrite("gradient_tolerance", &OptimizerConfig::gradient_tolerance)
      .def_readwrite("memory_pairs", &OptimizerConfig::memory_pairs)
      .def_readwrite("wolfe_c1", &OptimizerConfig::wolfe_c1)
      .def_readwrite("wolfe_c2", &OptimizerConfig::wolfe_c2);

  py::enum_<TerminationReason>(m, "TerminationReason")
      .value("gradient_small", TerminationReason::gradient_small)
      .value("max_iterations", TerminationReason::max_iterations)
      .value("line_search_failed", TerminationReason::line_search_failed);

  py::class_<OptimizationResult>(m, "OptimizationResult")
      .def_readonly("best_point", &OptimizationResult::best_point)
      .def_readonly("best_value", &OptimizationResult::best_value)
      .def_readonly("iterations_used", &OptimizationResult::iterations_used)
      .def_readonly("converged", &OptimizationResult::converged)
      .def_readonly("termination_reason",
                    &OptimizationResult::termination_reason);

  m.def(
      "minimize",
      [](const py::function& objective, const Vector& start,
         const OptimizerConfig& config) {
        return minimize(wrap_objective(objective), start, config);
      },
      py::arg("objective"), py::arg("start"),
      py::arg("config") = OptimizerConfig());
  m.def(
      "check_gradient",
      [](const py::function& objective, const Vector& point, double step) {
        return check_gradient(wrap_objective(objective), point, step);
      },
      py::arg("objective"), py::arg("point"), py::arg("step") = 1e-5);

  // Streaming model
  py::class_<SsgpConfig>(m, "SsgpConfig")
      .def(py::init<>())
      .def_readwrite("optimizer", &SsgpConfig::optimizer)
      .def_readwrite("target_pseudo_count", &SsgpConfig::target_pseudo_count)
      .def_readwrite("optimize_hyperparameters",
                     &SsgpConfig::optimize_hyperparameters)
      .def_readwrite("optimize_pseudo_inputs",
                     &SsgpConfig::optimize_pseudo_inputs);

  py::class_<SsgpUpdateResult>(m, "SsgpUpdateResult")
      .def_readonly("state", &SsgpUpdateResult::state)
      .def_readonly("objective", &SsgpUpdateResult::objective)
      .def_readonly("opt", &SsgpUpdateResult::opt);

  m.def("grow_pseudo_inputs", &grow_pseudo_inputs, py::arg("z"),
        py::arg("candidates"), py::arg("add_count"), py::arg("lengthscales"));
  m.def("ssgp_init", &ssgp_init, py::arg("batch"), py::arg("z0"),
        py::arg("hp0"), py::arg("config"));
  m.def("ssgp_elbo", &ssgp_elbo, py::arg("state_old"), py::arg("batch"),
        py::arg("z_new"), py::arg("hp_new"));
  m.def("ssgp_posterior", &ssgp_posterior, py::arg("state_old"),
        py::arg("batch"), py::arg("z_new"), py::arg("hp_new"));
  m.def("ssgp_update", &ssgp_update, py::arg("state_old"), py::arg("batch"),
        py::arg("config"));

  // Field and sampling
  py::class_<FieldGrid>(m, "FieldGrid")
      .def(py::init<>())
      .def_readwrite("width", &FieldGrid::width)
      .def_readwrite("height", &FieldGrid::height)
      .def_readwrite("resolution", &FieldGrid::resolution)
      .def_readwrite("values", &FieldGrid::values)
      .def("grid_inputs", &FieldGrid::grid_inputs)
      .def("value", &FieldGrid::value, py::arg("row"), py::arg("col"));

  py::class_<GridLocation>(m, "GridLocation")
      .def(py::init<>())
      .def_readwrite("row", &GridLocation::row)
      .def_readwrite("col", &GridLocation::col);

  py::class_<SamplingPlan>(m, "SamplingPlan")
      .def_readonly("waypoints", &SamplingPlan::waypoints)
      .def_readonly("batch_size", &SamplingPlan::batch_size)
      .def_readonly("noise_variance", &SamplingPlan::noise_variance)
      .def_property_readonly("batch_count", &SamplingPlan::batch_count);

  m.def("sample_gp_field", &sample_gp_field, py::arg("width"),
        py::arg("height"), py::arg("hp"), py::arg("seed"));
  m.def("lawnmower_plan", &lawnmower_plan, py::arg("grid"),
        py::arg("transect_count"), py::arg("samples_per_transect"),
        py::arg("batch_size"), py::arg("noise_variance"));
  m.def("observe_batch", &observe_batch, py::arg("field"), py::arg("plan"),
        py::arg("batch_index"), py::arg("rng"));
  m.def("load_grid_csv", &load_grid_csv, py::arg("path"));
  m.def("save_grid_csv", &save_grid_csv, py::arg("field"), py::arg("path"));

  // Metrics
  py::enum_<ModelKind>(m, "ModelKind")
      .value("gpr", ModelKind::gpr)
      .value("gpr_window", ModelKind::gpr_window)
      .value("vsgp", ModelKind::vsgp)
      .value("spgp", ModelKind::spgp)
      .value("ssgp", ModelKind::ssgp);

  m.def("rmse", &rmse, py::arg("truth"), py::arg("predicted_mean"));
  m.def("nlpd", &nlpd, py::arg("test_targets"), py::arg("prediction"));
  m.def("onboard_count", &onboard_count, py::arg("kind"), py::arg("n_seen"),
        py::arg("batch_size"), py::arg("window"), py::arg("pseudo_count"));

  py::class_<BatchRecord>(m, "BatchRecord")
      .def_readonly("model", &BatchRecord::model)
      .def_readonly("batch_index", &BatchRecord::batch_index)
      .def_readonly("cumulative_n", &BatchRecord::cumulative_n)
      .def_readonly("m_pseudo", &BatchRecord::m_pseudo)
      .def_readonly("rmse", &BatchRecord::rmse)
      .def_readonly("nlpd", &BatchRecord::nlpd)
      .def_readonly("train_seconds", &BatchRecord::train_seconds)
      .def_readonly("predict_seconds", &BatchRecord::predict_seconds)
      .def_readonly("onboard_points", &BatchRecord::onboard_points)
      .def_readonly("sigma_f2", &BatchRecord::sigma_f2)
      .def_readonly("ell_1", &BatchRecord::ell_1)
      .def_readonly("ell_2", &BatchRecord::ell_2)
      .def_readonly("sigma_y2", &BatchRecord::sigma_y2)
      .def_readonly("failed", &BatchRecord::failed);

  // Experiment driver
  py::enum_<FieldSource>(m, "FieldSource")
      .value("synthetic", FieldSource::synthetic)
      .value("csv", FieldSource::csv);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("field_source", &ExperimentConfig::field_source)
      .def_readwrite("field_csv_path", &ExperimentConfig::field_csv_path)
      .def_readwrite("field_width", &ExperimentConfig::field_width)
      .def_readwrite("field_height", &ExperimentConfig::field_height)
      .def_readwrite("field_seed", &ExperimentConfig::field_seed)
      .def_readwrite("field_hp", &ExperimentConfig::field_hp)
      .def_readwrite("transect_count", &ExperimentConfig::transect_count)
      .def_readwrite("samples_per_transect",
                     &ExperimentConfig::samples_per_transect)
      .def_readwrite("batch_size", &ExperimentConfig::batch_size)
      .def_readwrite("noise_variance", &ExperimentConfig::noise_variance)
      .def_readwrite("observation_seed", &ExperimentConfig::observation_seed)
      .def_readwrite("test_noise_seed", &ExperimentConfig::test_noise_seed)
      .def_readwrite("pseudo_init_seed", &ExperimentConfig::pseudo_init_seed)
      .def_readwrite("models", &ExperimentConfig::models)
      .def_readwrite("gpr_window", &ExperimentConfig::gpr_window)
      .def_readwrite("vsgp_pseudo_count", &ExperimentConfig::vsgp_pseudo_count)
      .def_readwrite("spgp_pseudo_count", &ExperimentConfig::spgp_pseudo_count)
      .def_readwrite("ssgp_pseudo_count", &ExperimentConfig::ssgp_pseudo_count)
      .def_readwrite("ssgp_alpha", &ExperimentConfig::ssgp_alpha)
      .def_readwrite("scaling_log_base", &ExperimentConfig::scaling_log_base)
      .def_readwrite("init_hp", &ExperimentConfig::init_hp)
      .def_readwrite("optimizer", &ExperimentConfig::optimizer)
      .def_readwrite("output_path", &ExperimentConfig::output_path)
      .def("validate", &ExperimentConfig::validate);

  py::class_<ResultTable>(m, "ResultTable")
      .def_readonly("rows", &ResultTable::rows)
      .def_readonly("metadata", &ResultTable::metadata);

  m.def("pseudo_count_schedule", &pseudo_count_schedule, py::arg("alpha"),
        py::arg("n_cumulative"), py::arg("log_base") = 0.0);
  m.def("load_experiment_config", &load_experiment_config, py::arg("path"));
  m.def("apply_config_entry", &apply_config_entry, py::arg("config"),
        py::arg("key"), py::arg("value"));
  m.def("run_experiment", &run_experiment, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_scaling_study", &run_scaling_study, py::arg("config"),
        py::arg("alphas"), py::call_guard<py::gil_scoped_release>());
  m.def("emit_results", &emit_results, py::arg("table"), py::arg("path"));
  m.def("load_results_csv", &load_results_csv, py::arg("path"));
}
