#pragma once

#include <stdexcept>
#include <string>

namespace geoprune {

/// Shapes or sizes that do not line up.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Feature vector with (near) zero length; angles are undefined for it.
class DegenerateFeature : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent on-disk data (manifests, blobs, archives).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Content hash recorded in a manifest does not match the bytes on disk.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedCorrelation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Registry lookups and writes: unknown or duplicate ids, missing cells.
class RegistryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFound : public RegistryError {
public:
    using RegistryError::RegistryError;
};

/// A sample id that is not part of the dataset it was checked against.
class UnknownSampleId : public std::invalid_argument {
public:
    explicit UnknownSampleId(unsigned long long id)
        : std::invalid_argument("unknown sample id " + std::to_string(id)), id_(id) {}
    unsigned long long id() const { return id_; }

private:
    unsigned long long id_;
};

}  // namespace geoprune
