// JSON and CSV interchange: matrices, operator specs, certificates, step
// plans, and iteration traces.
#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "ewc/certify.hpp"
#include "ewc/consensus.hpp"
#include "ewc/iterate.hpp"
#include "ewc/operators.hpp"
#include "ewc/types.hpp"

namespace ewc {

using Json = nlohmann::json;

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// Matrices travel as {"rows", "cols", "data"} with row-major data; vectors
/// as plain arrays.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// Scalar rules: {"name": "identity" | "linear" | "lrelu" | "min_lrelu" |
/// "piecewise"} with "slope", "alpha", or "xs"/"ys" as the kind requires.
ScalarFunction activation_from_json(const Json& j);

/// Operator specs carry {"type": "affine" | "diag_nonlin_affine" | "mas"}.
/// Affine: "matrix", "offset". Diagonal nonlinear: adds "activation" and an
/// optional "sector" {"d1", "d2"}. Mas: "adjacency", "theta", and either one
/// "rule" for all edges or "rules" [{"i", "j", ...rule}].
std::unique_ptr<Operator> operator_from_json(const Json& j);
MasModel mas_model_from_json(const Json& j);

Json certificate_to_json(const EwcCertificate& cert);
Json certificate_to_json(const EwcCertificate& cert, const StepSizePlan& plan);
Json plan_to_json(const StepSizePlan& plan);

/// CSV rows k, x_1..x_n, residual; the seed row k=0 has residual nan.
void write_trace_csv(std::ostream& out, const IterationTrace& trace);
void write_trace_csv_file(const std::string& path, const IterationTrace& trace);

Json trace_summary_json(const IterationTrace& trace);

}  // namespace ewc
