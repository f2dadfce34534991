#include "psymeter/validity.hpp"

namespace psymeter {

std::string_view to_string(ValidityKind k) {
  switch (k) {
    case ValidityKind::predictive: return "predictive";
    case ValidityKind::concurrent: return "concurrent";
    case ValidityKind::convergent: return "convergent";
    case ValidityKind::discriminant: return "discriminant";
  }
  return "unknown";
}

namespace {

ValidityReport correlate_as(ValidityKind kind, std::span<const double> a,
                            std::span<const double> b, CorrelationMethod method) {
  ValidityReport r;
  r.kind = kind;
  r.correlation = correlate(a, b, method);
  r.n = a.size();
  return r;
}

}  // namespace

ValidityReport predictive_validity(std::span<const double> test_scores,
                                   std::span<const double> criterion_scores,
                                   CorrelationMethod method) {
  auto r = correlate_as(ValidityKind::predictive, test_scores, criterion_scores, method);
  r.meets_threshold = r.correlation > kPredictiveThreshold;
  return r;
}

ValidityReport concurrent_validity(std::span<const double> new_test,
                                   std::span<const double> existing_test,
                                   CorrelationMethod method) {
  return correlate_as(ValidityKind::concurrent, new_test, existing_test, method);
}

DifferentialValidityReport differential_validity(std::span<const double> test,
                                                 std::span<const double> convergent_measure,
                                                 std::span<const double> discriminant_measure,
                                                 CorrelationMethod method, double margin) {
  DifferentialValidityReport r;
  r.convergent = correlate_as(ValidityKind::convergent, test, convergent_measure, method);
  r.discriminant = correlate_as(ValidityKind::discriminant, test, discriminant_measure, method);
  r.discrepancy = r.convergent.correlation - r.discriminant.correlation;
  r.concern = r.discrepancy <= margin;
  return r;
}

}  // namespace psymeter
