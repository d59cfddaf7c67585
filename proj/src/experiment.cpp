#include "streamgp/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "streamgp/exact_gp.hpp"
#include "streamgp/sparse_gp.hpp"
#include "streamgp/streaming_gp.hpp"

namespace streamgp {

ExperimentConfig::ExperimentConfig() {
  field_hp = Hyperparameters::from_values(
      1.0, (Vector(2) << 0.3, 0.7).finished(), 0.01);
  init_hp = Hyperparameters::from_values(1.0, Vector::Ones(2), 0.1);
}

void ExperimentConfig::validate() const {
  field_hp.validate();
  init_hp.validate();
  optimizer.validate();
  if (models.empty()) {
    throw std::invalid_argument("config: no models selected");
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      if (models[i] == models[j]) {
        throw std::invalid_argument("config: duplicate model in list");
      }
    }
  }
  const auto has = [&](ModelKind k) {
    return std::find(models.begin(), models.end(), k) != models.end();
  };
  if (batch_size < 1) throw std::invalid_argument("config: batch_size < 1");
  if (noise_variance < 0.0) {
    throw std::invalid_argument("config: negative noise_variance");
  }
  if (has(ModelKind::gpr_window) && gpr_window < batch_size) {
    throw std::invalid_argument("config: gpr_window smaller than batch_size");
  }
  if (has(ModelKind::vsgp) && vsgp_pseudo_count < 1) {
    throw std::invalid_argument("config: vsgp_pseudo_count < 1");
  }
  if (has(ModelKind::spgp) && spgp_pseudo_count < 1) {
    throw std::invalid_argument("config: spgp_pseudo_count < 1");
  }
  if (has(ModelKind::ssgp) && ssgp_alpha <= 0.0 && ssgp_pseudo_count < 1) {
    throw std::invalid_argument("config: ssgp needs a pseudo count or alpha");
  }
  if (ssgp_alpha < 0.0) {
    throw std::invalid_argument("config: negative ssgp_alpha");
  }
  if (scaling_log_base != 0.0 &&
      (scaling_log_base <= 0.0 || scaling_log_base == 1.0)) {
    throw std::invalid_argument("config: scaling_log_base must be > 0, != 1");
  }
  if (field_source == FieldSource::csv && field_csv_path.empty()) {
    throw std::invalid_argument("config: field = csv needs field_csv_path");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value, const std::string& key) {
  double out = 0.0;
  const char* b = value.data();
  const auto [ptr, ec] = std::from_chars(b, b + value.size(), out);
  if (ec != std::errc() || ptr != b + value.size()) {
    throw std::invalid_argument("config: bad number for " + key + ": '" +
                                value + "'");
  }
  return out;
}

Index parse_index(const std::string& value, const std::string& key) {
  long long out = 0;
  const char* b = value.data();
  const auto [ptr, ec] = std::from_chars(b, b + value.size(), out);
  if (ec != std::errc() || ptr != b + value.size()) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" +
                                value + "'");
  }
  return static_cast<Index>(out);
}

std::uint64_t parse_seed(const std::string& value, const std::string& key) {
  std::uint64_t out = 0;
  const char* b = value.data();
  const auto [ptr, ec] = std::from_chars(b, b + value.size(), out);
  if (ec != std::errc() || ptr != b + value.size()) {
    throw std::invalid_argument("config: bad seed for " + key + ": '" + value +
                                "'");
  }
  return out;
}

double parse_positive(const std::string& value, const std::string& key) {
  const double v = parse_double(value, key);
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument("config: " + key + " must be positive");
  }
  return v;
}

enum class HpField { sf2, ell1, ell2, sy2 };

void set_hp_component(Hyperparameters& hp, HpField which, double value) {
  double sf2 = hp.signal_variance();
  Vector ell = hp.lengthscales();
  double sy2 = hp.noise_variance();
  switch (which) {
    case HpField::sf2: sf2 = value; break;
    case HpField::ell1: ell(0) = value; break;
    case HpField::ell2: ell(1) = value; break;
    case HpField::sy2: sy2 = value; break;
  }
  hp = Hyperparameters::from_values(sf2, ell, sy2);
}

std::vector<ModelKind> parse_models(const std::string& value) {
  std::vector<ModelKind> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(model_kind_from_string(item));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
  if (key == "field") {
    if (value == "synthetic") {
      config.field_source = FieldSource::synthetic;
    } else if (value == "csv") {
      config.field_source = FieldSource::csv;
    } else {
      throw std::invalid_argument("config: field must be synthetic or csv");
    }
  } else if (key == "field_csv_path") {
    config.field_csv_path = value;
  } else if (key == "field_width") {
    config.field_width = parse_index(value, key);
  } else if (key == "field_height") {
    config.field_height = parse_index(value, key);
  } else if (key == "field_seed") {
    config.field_seed = parse_seed(value, key);
  } else if (key == "field_sigma_f2") {
    set_hp_component(config.field_hp, HpField::sf2, parse_positive(value, key));
  } else if (key == "field_ell_1") {
    set_hp_component(config.field_hp, HpField::ell1, parse_positive(value, key));
  } else if (key == "field_ell_2") {
    set_hp_component(config.field_hp, HpField::ell2, parse_positive(value, key));
  } else if (key == "transect_count") {
    config.transect_count = parse_index(value, key);
  } else if (key == "samples_per_transect") {
    config.samples_per_transect = parse_index(value, key);
  } else if (key == "batch_size") {
    config.batch_size = parse_index(value, key);
  } else if (key == "noise_variance") {
    config.noise_variance = parse_double(value, key);
  } else if (key == "observation_seed") {
    config.observation_seed = parse_seed(value, key);
  } else if (key == "test_noise_seed") {
    config.test_noise_seed = parse_seed(value, key);
  } else if (key == "pseudo_init_seed") {
    config.pseudo_init_seed = parse_seed(value, key);
  } else if (key == "models") {
    config.models = parse_models(value);
  } else if (key == "gpr_window") {
    config.gpr_window = parse_index(value, key);
  } else if (key == "vsgp_pseudo_count") {
    config.vsgp_pseudo_count = parse_index(value, key);
  } else if (key == "spgp_pseudo_count") {
    config.spgp_pseudo_count = parse_index(value, key);
  } else if (key == "ssgp_pseudo_count") {
    config.ssgp_pseudo_count = parse_index(value, key);
  } else if (key == "ssgp_alpha") {
    config.ssgp_alpha = parse_double(value, key);
  } else if (key == "scaling_log_base") {
    config.scaling_log_base = (value == "e") ? 0.0 : parse_positive(value, key);
  } else if (key == "init_sigma_f2") {
    set_hp_component(config.init_hp, HpField::sf2, parse_positive(value, key));
  } else if (key == "init_ell_1") {
    set_hp_component(config.init_hp, HpField::ell1, parse_positive(value, key));
  } else if (key == "init_ell_2") {
    set_hp_component(config.init_hp, HpField::ell2, parse_positive(value, key));
  } else if (key == "init_sigma_y2") {
    set_hp_component(config.init_hp, HpField::sy2, parse_positive(value, key));
  } else if (key == "max_iterations") {
    config.optimizer.max_iterations = static_cast<int>(parse_index(value, key));
  } else if (key == "gradient_tolerance") {
    config.optimizer.gradient_tolerance = parse_positive(value, key);
  } else if (key == "memory_pairs") {
    config.optimizer.memory_pairs = static_cast<int>(parse_index(value, key));
  } else if (key == "wolfe_c1") {
    config.optimizer.wolfe_c1 = parse_positive(value, key);
  } else if (key == "wolfe_c2") {
    config.optimizer.wolfe_c2 = parse_positive(value, key);
  } else if (key == "output_path") {
    config.output_path = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      apply_config_entry(config, key, value);
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " +
                                  err.what());
    }
  }
  return config;
}

Index pseudo_count_schedule(double alpha, Index n_cumulative, double log_base) {
  if (alpha <= 0.0 || n_cumulative < 1) {
    throw std::invalid_argument("pseudo_count_schedule: need alpha > 0, N >= 1");
  }
  double log_n = std::log(static_cast<double>(n_cumulative));
  if (log_base > 0.0) log_n /= std::log(log_base);
  return static_cast<Index>(std::ceil(alpha * log_n * log_n + 1.0));
}

namespace {

Matrix uniform_pseudo_inputs(Index m, std::uint64_t seed) {
  NormalRng rng(seed);
  Matrix z(m, 2);
  for (Index i = 0; i < m; ++i) {
    for (Index d = 0; d < 2; ++d) z(i, d) = rng.uniform();
  }
  return z;
}

// Wraps a maximized Objective as a minimization callback; numerical
// failures at trial points surface as +inf so the line search backs off
// instead of aborting the whole run.
template <typename Eval>
double guarded_negated(const Eval& eval, const Vector& x, Vector& grad) {
  try {
    const Objective obj = eval(x);
    grad = -obj.gradient;
    return -obj.value;
  } catch (const NumericalError&) {
    grad = Vector::Zero(x.size());
    return std::numeric_limits<double>::infinity();
  }
}

class ModelDriver {
 public:
  virtual ~ModelDriver() = default;
  virtual std::string name() const = 0;
  /// n_seen counts every stream sample up to and including this batch.
  /// Must either commit a full new state or leave the old one untouched.
  virtual void update(const Dataset& batch, Index n_seen) = 0;
  virtual Prediction predict(const Matrix& queries) const = 0;
  virtual Hyperparameters hyperparameters() const = 0;
  virtual Index pseudo_count() const = 0;
  virtual Index onboard(Index n_seen, Index batch_size) const = 0;
};

class GprDriver final : public ModelDriver {
 public:
  GprDriver(ModelKind kind, const ExperimentConfig& cfg)
      : kind_(kind),
        hp_(cfg.init_hp),
        window_(cfg.gpr_window),
        opt_cfg_(cfg.optimizer) {}

  std::string name() const override { return to_string(kind_); }

  void update(const Dataset& batch, Index) override {
    Dataset next = kind_ == ModelKind::gpr_window
                       ? gpr_window_update(data_, batch, window_)
                       : Dataset::concat(data_, batch);
    const ObjectiveFn objective = [&next](const Vector& x, Vector& grad) {
      return guarded_negated(
          [&next](const Vector& v) {
            return gpr_log_marginal_likelihood(next,
                                               Hyperparameters::from_vector(v));
          },
          x, grad);
    };
    const OptimizationResult result =
        minimize(objective, hp_.to_vector(), opt_cfg_);
    hp_ = Hyperparameters::from_vector(result.best_point);
    data_ = std::move(next);
  }

  Prediction predict(const Matrix& queries) const override {
    return gpr_predict(data_, hp_, queries);
  }
  Hyperparameters hyperparameters() const override { return hp_; }
  Index pseudo_count() const override { return 0; }
  Index onboard(Index n_seen, Index batch_size) const override {
    return onboard_count(kind_, n_seen, batch_size, window_, 0);
  }

 private:
  ModelKind kind_;
  Dataset data_;
  Hyperparameters hp_;
  Index window_;
  OptimizerConfig opt_cfg_;
};

class SparseBatchDriver final : public ModelDriver {
 public:
  SparseBatchDriver(ModelKind kind, const ExperimentConfig& cfg)
      : kind_(kind), hp_(cfg.init_hp), opt_cfg_(cfg.optimizer) {
    const Index m = kind == ModelKind::vsgp ? cfg.vsgp_pseudo_count
                                            : cfg.spgp_pseudo_count;
    z_ = uniform_pseudo_inputs(m, cfg.pseudo_init_seed);
    state_ = vsgp_optimal_q(Dataset(), z_, hp_);  // prior until the first fit
  }

  std::string name() const override { return to_string(kind_); }

  void update(const Dataset& batch, Index) override {
    Dataset next = Dataset::concat(data_, batch);
    const Index m = z_.rows();
    const Index d = z_.cols();
    const ObjectiveFn objective = [&](const Vector& x, Vector& grad) {
      return guarded_negated(
          [&](const Vector& v) {
            Hyperparameters hp;
            Matrix z;
            unpack_params(v, m, d, hp, z);
            return kind_ == ModelKind::vsgp
                       ? vsgp_elbo(next, z, hp)
                       : spgp_log_marginal_likelihood(next, z, hp);
          },
          x, grad);
    };
    const OptimizationResult result =
        minimize(objective, pack_params(hp_, z_), opt_cfg_);
    Hyperparameters hp_best;
    Matrix z_best;
    unpack_params(result.best_point, m, d, hp_best, z_best);
    SparseState fitted = kind_ == ModelKind::vsgp
                             ? vsgp_optimal_q(next, z_best, hp_best)
                             : spgp_fit_state(next, z_best, hp_best);
    data_ = std::move(next);
    hp_ = hp_best;
    z_ = std::move(z_best);
    state_ = std::move(fitted);
  }

  Prediction predict(const Matrix& queries) const override {
    return sparse_predict(state_, state_.hp_snapshot, queries);
  }
  Hyperparameters hyperparameters() const override { return hp_; }
  Index pseudo_count() const override { return z_.rows(); }
  Index onboard(Index n_seen, Index batch_size) const override {
    return onboard_count(kind_, n_seen, batch_size, 0, z_.rows());
  }

 private:
  ModelKind kind_;
  Dataset data_;
  Hyperparameters hp_;
  Matrix z_;
  SparseState state_;
  OptimizerConfig opt_cfg_;
};

class SsgpDriver final : public ModelDriver {
 public:
  explicit SsgpDriver(const ExperimentConfig& cfg)
      : alpha_(cfg.ssgp_alpha),
        log_base_(cfg.scaling_log_base),
        fixed_m_(cfg.ssgp_pseudo_count),
        seed_(cfg.pseudo_init_seed),
        hp0_(cfg.init_hp) {
    ssgp_cfg_.optimizer = cfg.optimizer;
    const Index m0 = target_for(cfg.batch_size);
    state_ = vsgp_optimal_q(Dataset(), uniform_pseudo_inputs(m0, seed_), hp0_);
  }

  std::string name() const override { return to_string(ModelKind::ssgp); }

  void update(const Dataset& batch, Index n_seen) override {
    if (!initialized_) {
      const Index m = target_for(n_seen);
      SsgpUpdateResult result =
          ssgp_init(batch, uniform_pseudo_inputs(m, seed_), hp0_, ssgp_cfg_);
      state_ = std::move(result.state);
      initialized_ = true;
    } else {
      SsgpConfig cfg = ssgp_cfg_;
      cfg.target_pseudo_count = target_for(n_seen);
      SsgpUpdateResult result = ssgp_update(state_, batch, cfg);
      state_ = std::move(result.state);
    }
  }

  Prediction predict(const Matrix& queries) const override {
    return sparse_predict(state_, state_.hp_snapshot, queries);
  }
  Hyperparameters hyperparameters() const override { return state_.hp_snapshot; }
  Index pseudo_count() const override { return state_.pseudo_count(); }
  Index onboard(Index n_seen, Index batch_size) const override {
    return onboard_count(ModelKind::ssgp, n_seen, batch_size, 0,
                         state_.pseudo_count());
  }

 private:
  Index target_for(Index n_seen) const {
    return alpha_ > 0.0 ? pseudo_count_schedule(alpha_, n_seen, log_base_)
                        : fixed_m_;
  }

  double alpha_;
  double log_base_;
  Index fixed_m_;
  std::uint64_t seed_;
  Hyperparameters hp0_;
  SsgpConfig ssgp_cfg_;
  SparseState state_;
  bool initialized_ = false;
};

std::unique_ptr<ModelDriver> make_driver(ModelKind kind,
                                         const ExperimentConfig& cfg) {
  switch (kind) {
    case ModelKind::gpr:
    case ModelKind::gpr_window:
      return std::make_unique<GprDriver>(kind, cfg);
    case ModelKind::vsgp:
    case ModelKind::spgp:
      return std::make_unique<SparseBatchDriver>(kind, cfg);
    case ModelKind::ssgp:
      return std::make_unique<SsgpDriver>(cfg);
  }
  throw std::invalid_argument("make_driver: unknown ModelKind");
}

std::map<std::string, std::string> serialize_config(const ExperimentConfig& c) {
  std::map<std::string, std::string> m;
  m["field"] = c.field_source == FieldSource::synthetic ? "synthetic" : "csv";
  m["field_csv_path"] = c.field_csv_path;
  m["field_width"] = std::to_string(c.field_width);
  m["field_height"] = std::to_string(c.field_height);
  m["field_seed"] = std::to_string(c.field_seed);
  m["field_sigma_f2"] = fmt_double(c.field_hp.signal_variance());
  m["field_ell_1"] = fmt_double(c.field_hp.lengthscales()(0));
  m["field_ell_2"] = fmt_double(c.field_hp.lengthscales()(1));
  m["transect_count"] = std::to_string(c.transect_count);
  m["samples_per_transect"] = std::to_string(c.samples_per_transect);
  m["batch_size"] = std::to_string(c.batch_size);
  m["noise_variance"] = fmt_double(c.noise_variance);
  m["observation_seed"] = std::to_string(c.observation_seed);
  m["test_noise_seed"] = std::to_string(c.test_noise_seed);
  m["pseudo_init_seed"] = std::to_string(c.pseudo_init_seed);
  std::string names;
  for (const ModelKind kind : c.models) {
    if (!names.empty()) names += ",";
    names += to_string(kind);
  }
  m["models"] = names;
  m["gpr_window"] = std::to_string(c.gpr_window);
  m["vsgp_pseudo_count"] = std::to_string(c.vsgp_pseudo_count);
  m["spgp_pseudo_count"] = std::to_string(c.spgp_pseudo_count);
  m["ssgp_pseudo_count"] = std::to_string(c.ssgp_pseudo_count);
  m["ssgp_alpha"] = fmt_double(c.ssgp_alpha);
  m["scaling_log_base"] =
      c.scaling_log_base == 0.0 ? "e" : fmt_double(c.scaling_log_base);
  m["init_sigma_f2"] = fmt_double(c.init_hp.signal_variance());
  m["init_ell_1"] = fmt_double(c.init_hp.lengthscales()(0));
  m["init_ell_2"] = fmt_double(c.init_hp.lengthscales()(1));
  m["init_sigma_y2"] = fmt_double(c.init_hp.noise_variance());
  m["max_iterations"] = std::to_string(c.optimizer.max_iterations);
  m["gradient_tolerance"] = fmt_double(c.optimizer.gradient_tolerance);
  m["memory_pairs"] = std::to_string(c.optimizer.memory_pairs);
  m["wolfe_c1"] = fmt_double(c.optimizer.wolfe_c1);
  m["wolfe_c2"] = fmt_double(c.optimizer.wolfe_c2);
  m["output_path"] = c.output_path;
  return m;
}

constexpr const char* kVersion = "streamgp 0.1.0";

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const FieldGrid field =
      config.field_source == FieldSource::synthetic
          ? sample_gp_field(config.field_width, config.field_height,
                            config.field_hp, config.field_seed)
          : load_grid_csv(config.field_csv_path);
  const SamplingPlan plan =
      lawnmower_plan(field, config.transect_count, config.samples_per_transect,
                     config.batch_size, config.noise_variance);

  const Matrix test_inputs = field.grid_inputs();
  const Vector& truth = field.values;
  Vector noisy_targets = truth;
  {
    NormalRng rng(config.test_noise_seed);
    const double sd = std::sqrt(config.noise_variance);
    for (Index i = 0; i < noisy_targets.size(); ++i) {
      noisy_targets(i) += sd * rng.normal();
    }
  }

  // Every model sees the same observation stream in the same order.
  std::vector<Dataset> batches;
  {
    NormalRng rng(config.observation_seed);
    batches.reserve(plan.batch_count());
    for (Index b = 0; b < plan.batch_count(); ++b) {
      batches.push_back(observe_batch(field, plan, b, rng));
    }
  }

  std::vector<std::unique_ptr<ModelDriver>> drivers;
  drivers.reserve(config.models.size());
  for (const ModelKind kind : config.models) {
    drivers.push_back(make_driver(kind, config));
  }

  ResultTable table;
  table.rows.reserve(batches.size() * drivers.size());
  for (Index b = 0; b < static_cast<Index>(batches.size()); ++b) {
    const Index cumulative = (b + 1) * config.batch_size;
    for (auto& driver : drivers) {
      BatchRecord rec;
      rec.model = driver->name();
      rec.batch_index = b + 1;
      rec.cumulative_n = cumulative;

      const Stopwatch train_sw;
      try {
        driver->update(batches[b], cumulative);
      } catch (const std::exception&) {
        rec.failed = true;  // keep the previous state, keep streaming
      }
      rec.train_seconds = train_sw.seconds();

      const Stopwatch predict_sw;
      Prediction pred;
      try {
        pred = driver->predict(test_inputs);
      } catch (const std::exception&) {
        rec.failed = true;
        const Hyperparameters hp = driver->hyperparameters();
        pred.mean = Vector::Zero(test_inputs.rows());
        pred.variance_f =
            Vector::Constant(test_inputs.rows(), hp.signal_variance());
        pred.variance_y = pred.variance_f.array() + hp.noise_variance();
      }
      rec.predict_seconds = predict_sw.seconds();

      rec.rmse = rmse(truth, pred.mean);
      rec.nlpd = nlpd(noisy_targets, pred);
      const Hyperparameters hp = driver->hyperparameters();
      rec.sigma_f2 = hp.signal_variance();
      const Vector ell = hp.lengthscales();
      rec.ell_1 = ell(0);
      rec.ell_2 = ell(1);
      rec.sigma_y2 = hp.noise_variance();
      rec.m_pseudo = driver->pseudo_count();
      rec.onboard_points = driver->onboard(cumulative, config.batch_size);
      table.rows.push_back(std::move(rec));
    }
  }

  table.metadata = serialize_config(config);
  table.metadata["version"] = kVersion;
  return table;
}

ResultTable run_scaling_study(const ExperimentConfig& config,
                              const std::vector<double>& alphas) {
  config.validate();
  if (std::find(config.models.begin(), config.models.end(), ModelKind::ssgp) ==
      config.models.end()) {
    throw std::invalid_argument("scaling study: ssgp not in the model list");
  }
  if (alphas.empty()) {
    throw std::invalid_argument("scaling study: no alphas given");
  }

  ResultTable combined;
  std::string alpha_list;
  for (const double alpha : alphas) {
    if (!(alpha > 0.0)) {
      throw std::invalid_argument("scaling study: alpha must be positive");
    }
    ExperimentConfig sub = config;
    sub.models = {ModelKind::ssgp};
    sub.ssgp_alpha = alpha;
    ResultTable t = run_experiment(sub);
    const std::string tag = "ssgp@alpha=" + fmt_short(alpha);
    for (BatchRecord& row : t.rows) {
      row.model = tag;
      combined.rows.push_back(std::move(row));
    }
    if (!alpha_list.empty()) alpha_list += ",";
    alpha_list += fmt_short(alpha);
  }
  {
    ExperimentConfig sub = config;
    sub.models = {ModelKind::gpr};
    ResultTable t = run_experiment(sub);
    for (BatchRecord& row : t.rows) {
      combined.rows.push_back(std::move(row));
    }
  }
  combined.metadata = serialize_config(config);
  combined.metadata["version"] = kVersion;
  combined.metadata["alphas"] = alpha_list;
  return combined;
}

namespace {

constexpr const char* kCsvHeader =
    "model,batch_index,cumulative_n,m_pseudo,rmse,nlpd,train_seconds,"
    "predict_seconds,onboard_points,sigma_f2,ell_1,ell_2,sigma_y2,failed";

}  // namespace

void emit_results(const ResultTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_results: cannot open " + path);
  }
  out << kCsvHeader << "\n";
  char buf[512];
  for (const BatchRecord& r : table.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%s,%lld,%lld,%lld,%.17g,%.17g,%.17g,%.17g,%lld,%.17g,%.17g,"
                  "%.17g,%.17g,%d\n",
                  r.model.c_str(), static_cast<long long>(r.batch_index),
                  static_cast<long long>(r.cumulative_n),
                  static_cast<long long>(r.m_pseudo), r.rmse, r.nlpd,
                  r.train_seconds, r.predict_seconds,
                  static_cast<long long>(r.onboard_points), r.sigma_f2, r.ell_1,
                  r.ell_2, r.sigma_y2, r.failed ? 1 : 0);
    out << buf;
  }
  if (!out.good()) {
    throw std::runtime_error("emit_results: write failed for " + path);
  }
  out.close();

  nlohmann::json meta(table.metadata);
  std::ofstream sidecar(path + ".meta.json", std::ios::binary);
  if (!sidecar) {
    throw std::runtime_error("emit_results: cannot open " + path +
                             ".meta.json");
  }
  sidecar << meta.dump(2) << "\n";
  if (!sidecar.good()) {
    throw std::runtime_error("emit_results: write failed for " + path +
                             ".meta.json");
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double field_double(const std::string& s, const std::string& path, int line) {
  double out = 0.0;
  const char* b = s.data();
  const auto [ptr, ec] = std::from_chars(b, b + s.size(), out);
  if (ec != std::errc() || ptr != b + s.size()) {
    throw std::runtime_error(path + ":" + std::to_string(line) +
                             ": bad numeric field '" + s + "'");
  }
  return out;
}

Index field_index(const std::string& s, const std::string& path, int line) {
  long long out = 0;
  const char* b = s.data();
  const auto [ptr, ec] = std::from_chars(b, b + s.size(), out);
  if (ec != std::errc() || ptr != b + s.size()) {
    throw std::runtime_error(path + ":" + std::to_string(line) +
                             ": bad integer field '" + s + "'");
  }
  return static_cast<Index>(out);
}

}  // namespace

ResultTable load_results_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_results_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("load_results_csv: bad header in " + path);
  }
  ResultTable table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 14) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 14 fields, got " +
                               std::to_string(f.size()));
    }
    BatchRecord r;
    r.model = f[0];
    r.batch_index = field_index(f[1], path, line_no);
    r.cumulative_n = field_index(f[2], path, line_no);
    r.m_pseudo = field_index(f[3], path, line_no);
    r.rmse = field_double(f[4], path, line_no);
    r.nlpd = field_double(f[5], path, line_no);
    r.train_seconds = field_double(f[6], path, line_no);
    r.predict_seconds = field_double(f[7], path, line_no);
    r.onboard_points = field_index(f[8], path, line_no);
    r.sigma_f2 = field_double(f[9], path, line_no);
    r.ell_1 = field_double(f[10], path, line_no);
    r.ell_2 = field_double(f[11], path, line_no);
    r.sigma_y2 = field_double(f[12], path, line_no);
    r.failed = field_index(f[13], path, line_no) != 0;
    table.rows.push_back(std::move(r));
  }
  return table;
}

}  // namespace streamgp
