#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff {

/// Unknown method or parameter name. Carries the accepted names.
class UnknownNameError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct MethodInfo {
  std::string name;
  std::string summary;
  /// Parameters with defaults and tuning bounds for this signal (bounds
  /// depend on the step and length).
  std::function<std::vector<ParamSpec>(const Signal&)> schema;
  std::function<DerivativeResult(const Signal&, const Params&)> run;
};

const std::vector<MethodInfo>& method_registry();
/// Accepts a name without its "diff" suffix. Throws UnknownNameError listing
/// the registered names.
const MethodInfo& find_method(std::string_view name);

MethodConfig default_config(const std::string& method, const Signal& signal);

/// Runs `method` with defaults overridden by `params`. Unknown parameter
/// names throw UnknownNameError; integer parameters must be integral.
DerivativeResult run_method(const std::string& method, const Signal& signal, const Params& params);

/// One line per parameter: name, default, bounds, scale.
std::string describe_schema(const std::string& method, const Signal& signal);

}  // namespace ndiff
