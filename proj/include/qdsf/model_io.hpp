// model_io.hpp — JSON (de)serialization of matrices, model files and reports

#pragma once

#include <string>

#include <json.hpp>

#include "qdsf/davies.hpp"
#include "qdsf/types.hpp"

namespace qdsf {

// {"dim": d, "re": [[...]], "im": [[...]]}, row-major.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& path);

struct ModelFile {
    Matrix h_sys;
    std::vector<ReservoirSpec> reservoirs;
};

// Parses and field-validates a model file; throws ParseError with a field
// path on malformed input (beta <= 0, non-PSD h, shape mismatches, ...).
ModelFile parse_model(const nlohmann::json& j);
ModelFile load_model_file(const std::string& path);

nlohmann::json model_to_json(const ModelFile& m);

WeakCouplingModel assemble_model_file(const ModelFile& file, const Tolerances& tol = {});

nlohmann::json report_to_json(const PropertyReport& rep);

} // namespace qdsf
