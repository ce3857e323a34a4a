#include "options.hpp"

#include <type_traits>
#include <variant>

#include "expdesign/errors.hpp"

namespace expdesign::cli {

void DesignFlags::add_to(CLI::App& cmd) {
  cmd.add_option("--design", design, "bcrd, r, g, m, mr or mg")->capture_default_str();
  cmd.add_option("--rerand-mode", rerand_mode, "R/MR screening: quantile, threshold or best-of")
      ->check(CLI::IsMember({"quantile", "threshold", "best-of"}))
      ->capture_default_str();
  cmd.add_option("--rerand-param", rerand_param, "Quantile q, threshold a or candidate count")
      ->capture_default_str();
  cmd.add_option("--max-draws", max_draws, "Candidate budget per R/MR draw")->capture_default_str();
  cmd.add_option("--pilot-pool", pilot_pool, "Candidates used to calibrate a quantile threshold")
      ->capture_default_str();
  cmd.add_option("--greedy-tolerance", greedy_tolerance, "Minimum improvement per switch")
      ->capture_default_str();
}

DesignSpec DesignFlags::spec() const {
  DesignSpec s;
  s.kind = parse_design_kind(design);
  if (rerand_mode == "quantile") {
    s.rerand = Quantile{rerand_param};
  } else if (rerand_mode == "threshold") {
    s.rerand = Threshold{rerand_param};
  } else {
    if (!(rerand_param >= 1.0) || rerand_param != static_cast<double>(static_cast<std::size_t>(rerand_param))) {
      throw UsageError("best-of needs a positive integer --rerand-param");
    }
    s.rerand = BestOf{static_cast<std::size_t>(rerand_param)};
  }
  s.max_candidate_draws = max_draws;
  s.pilot_pool = pilot_pool;
  s.greedy_tolerance = greedy_tolerance;
  s.validate();
  return s;
}

Json spec_json(const DesignSpec& spec) {
  Json j;
  j["kind"] = to_string(spec.kind);
  if (spec.kind == DesignKind::R || spec.kind == DesignKind::MR) {
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Threshold>) {
            j["rerand_mode"] = "threshold";
            j["rerand_param"] = m.a;
          } else if constexpr (std::is_same_v<T, Quantile>) {
            j["rerand_mode"] = "quantile";
            j["rerand_param"] = m.q;
          } else {
            j["rerand_mode"] = "best-of";
            j["rerand_param"] = m.n;
          }
        },
        spec.rerand);
    j["max_candidate_draws"] = spec.max_candidate_draws;
    if (std::holds_alternative<Quantile>(spec.rerand)) j["pilot_pool"] = spec.pilot_pool;
  }
  if (spec.kind == DesignKind::G || spec.kind == DesignKind::MG) {
    j["greedy_tolerance"] = spec.greedy_tolerance;
  }
  return j;
}

}  // namespace expdesign::cli
