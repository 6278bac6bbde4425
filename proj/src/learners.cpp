#include "born_psa/learners.hpp"

#include <cmath>

namespace born_psa {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::DivergencePsa: return "divergence_psa";
    case Algorithm::Sla: return "sla";
    case Algorithm::BachPsa: return "bach_psa";
    case Algorithm::OjaSingle: return "oja_single";
    case Algorithm::BachSingle: return "bach_single";
    case Algorithm::TohmPca: return "tohm_pca";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& text) {
  for (auto a : {Algorithm::DivergencePsa, Algorithm::Sla, Algorithm::BachPsa, Algorithm::OjaSingle,
                 Algorithm::BachSingle, Algorithm::TohmPca}) {
    if (to_string(a) == text) return a;
  }
  throw PreconditionError("unknown algorithm '" + text + "'");
}

std::string to_string(EntropyProjection p) { return p == EntropyProjection::None ? "none" : "tangent"; }

EntropyProjection parse_entropy_projection(const std::string& text) {
  if (text == "none") return EntropyProjection::None;
  if (text == "tangent") return EntropyProjection::Tangent;
  throw PreconditionError("unknown entropy projection '" + text + "'");
}

void LearnerConfig::validate() const {
  if (N < 1 || N > K) throw PreconditionError("learner: need 1 <= N <= K");
  schedule.validate();
  if ((algorithm == Algorithm::OjaSingle || algorithm == Algorithm::BachSingle) && N != 1) {
    throw PreconditionError("learner: single-unit rules need N == 1");
  }
  if ((algorithm == Algorithm::BachPsa || algorithm == Algorithm::BachSingle) && !(b > 0.0 && b <= 1.0)) {
    throw PreconditionError("learner: BACH exponent must lie in (0, 1]");
  }
  if (algorithm == Algorithm::TohmPca && !(std::abs(mu) < 1.0)) {
    throw PreconditionError("learner: |mu| must be below 1");
  }
}

}  // namespace born_psa
