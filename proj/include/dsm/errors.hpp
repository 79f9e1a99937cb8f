#pragma once

#include <stdexcept>
#include <string>

namespace dsm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error { public: using Error::Error; };
class MissingStatistic : public Error { public: using Error::Error; };
class NumericalFailure : public Error { public: using Error::Error; };
class Unsupported : public Error { public: using Error::Error; };
class ProbeSingular : public Error { public: using Error::Error; };
class MetricNotPD : public Error { public: using Error::Error; };
class HessianStructureViolated : public Error { public: using Error::Error; };
class NotFlat : public Error { public: using Error::Error; };
class NotIntegrable : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

class NoConvergence : public Error {
public:
    enum class Reason { MaxIterations, LineSearch, SaddleOrMax };
    NoConvergence(Reason r, const std::string& what) : Error(what), reason(r) {}
    Reason reason;
};

} // namespace dsm
