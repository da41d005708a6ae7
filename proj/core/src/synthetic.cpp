#include "driftqa/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "driftqa/error.hpp"
#include "driftqa/random.hpp"

namespace driftqa {

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.points == 0) throw Error(ErrorKind::Domain, "synthetic point count must be positive");
  if (spec.classes < 2) throw Error(ErrorKind::Domain, "synthetic data needs at least 2 classes");
  const std::size_t class_axes = spec.classes == 2 ? 1 : 2;
  if (spec.dim < 1 + class_axes) {
    throw Error(ErrorKind::Domain, "synthetic data with " + std::to_string(spec.classes) +
                                       " classes needs at least " + std::to_string(1 + class_axes) +
                                       " features");
  }
  for (const GroupShape* g : {&spec.easy, &spec.hard}) {
    if (!(g->spread > 0.0) || !std::isfinite(g->spread)) {
      throw Error(ErrorKind::Domain, "degenerate covariance: spread must be positive");
    }
    if (!(g->label_noise >= 0.0 && g->label_noise < 1.0)) {
      throw Error(ErrorKind::Domain, "label noise must lie in [0, 1)");
    }
  }
  if (!(spec.hard_fraction > 0.0 && spec.hard_fraction < 1.0)) {
    throw Error(ErrorKind::Domain, "hard_fraction must lie strictly between 0 and 1");
  }

  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(0, spec.classes - 1);
  std::uniform_int_distribution<int> pick_other(1, spec.classes - 1);

  Matrix x(spec.points, spec.dim);
  std::vector<int> labels(spec.points);
  std::vector<SampleId> ids(spec.points);
  for (std::size_t i = 0; i < spec.points; ++i) {
    const bool hard = unit(rng) < spec.hard_fraction;
    const GroupShape& g = hard ? spec.hard : spec.easy;
    const double sign = hard ? 1.0 : -1.0;
    const int c = pick_class(rng);

    x(i, 0) = sign * spec.group_offset + gauss(rng);
    if (class_axes == 1) {
      x(i, 1) = (c == 0 ? -g.class_offset : g.class_offset) + g.spread * gauss(rng);
    } else {
      const double angle = 2.0 * std::numbers::pi * c / spec.classes;
      x(i, 1) = g.class_offset * std::cos(angle) + g.spread * gauss(rng);
      x(i, 2) = g.class_offset * std::sin(angle) + g.spread * gauss(rng);
    }
    for (std::size_t j = 1 + class_axes; j < spec.dim; ++j) x(i, j) = sign * spec.aux_offset + gauss(rng);

    int y = c;
    if (g.label_noise > 0.0 && unit(rng) < g.label_noise) y = (c + pick_other(rng)) % spec.classes;
    labels[i] = y;
    ids[i] = static_cast<SampleId>(i);
  }
  return Dataset(std::move(x), std::move(labels), std::move(ids), spec.classes);
}

namespace {

nlohmann::json shape_json(const GroupShape& g) {
  return {{"class_offset", g.class_offset}, {"spread", g.spread}, {"label_noise", g.label_noise}};
}

GroupShape shape_from(const nlohmann::json& j, GroupShape g) {
  g.class_offset = j.value("class_offset", g.class_offset);
  g.spread = j.value("spread", g.spread);
  g.label_noise = j.value("label_noise", g.label_noise);
  return g;
}

}  // namespace

nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"points", s.points},
          {"dim", s.dim},
          {"classes", s.classes},
          {"hard_fraction", s.hard_fraction},
          {"group_offset", s.group_offset},
          {"aux_offset", s.aux_offset},
          {"easy", shape_json(s.easy)},
          {"hard", shape_json(s.hard)},
          {"seed", s.seed}};
}

SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
  try {
    SyntheticSpec s;
    s.points = j.value("points", s.points);
    s.dim = j.value("dim", s.dim);
    s.classes = j.value("classes", s.classes);
    s.hard_fraction = j.value("hard_fraction", s.hard_fraction);
    s.group_offset = j.value("group_offset", s.group_offset);
    s.aux_offset = j.value("aux_offset", s.aux_offset);
    if (j.contains("easy")) s.easy = shape_from(j.at("easy"), s.easy);
    if (j.contains("hard")) s.hard = shape_from(j.at("hard"), s.hard);
    s.seed = j.value("seed", s.seed);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("synthetic spec: ") + e.what());
  }
}

}  // namespace driftqa
