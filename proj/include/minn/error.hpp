#pragma once

#include <stdexcept>
#include <string>

namespace minn {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Data ingestion
class SchemaError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class IntegrityError : public Error { public: using Error::Error; };
class LabelError : public Error { public: using Error::Error; };

// Configuration and shapes
class ConfigError : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };

// Numerics and training
class NumericError : public Error { public: using Error::Error; };
class FitError : public Error { public: using Error::Error; };
class TrainError : public Error { public: using Error::Error; };
class EvalError : public Error { public: using Error::Error; };

} // namespace minn
