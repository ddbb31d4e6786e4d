#pragma once

#include <json.hpp>

#include <string>

#include "preg/conlag.hpp"
#include "preg/optimality.hpp"
#include "preg/pfactor.hpp"
#include "preg/solvers.hpp"
#include "preg/tangent.hpp"
#include "preg/types.hpp"

namespace preg::report {

using json = nlohmann::ordered_json;

json to_json(const Vec& v);
json to_json(const Mat& m);
json to_json(const linalg::Subspace& s);
json to_json(const solvers::SolveReport& r);
json to_json(const pfactor::Decomposition& d);
json to_json(const pfactor::FactorOperator& f);
json to_json(const pfactor::RegularityCheck& r);
json to_json(const pfactor::NewtonChain& c);
json to_json(const pfactor::StrongRegularityEstimate& e);
json to_json(const optimality::LagrangeCertificate& c);
json to_json(const optimality::CertifyReport& r);
json to_json(const conlag::DirectionInfo& d);
json to_json(const conlag::LemmaCertificate& c);
json to_json(const tangent::ConeDescription& c);
json to_json(const tangent::TraceResult& t);
json to_json(const tangent::DistanceFit& f);

// Stable serialization: fixed field order, floating-point numbers with 17
// significant digits, NaN/inf as null.
std::string serialize(const json& j, int indent = 2);

std::string render_table(const json& report);
std::string render_csv(const json& report);

}  // namespace preg::report
