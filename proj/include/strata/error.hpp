/*
   Copyright 2026 The strata Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace strata {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or a malformed experiment description.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A query outside the domain of an object (e.g. an unlisted level of a
/// fixed orientation scheme, or p outside (0,1)).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An index past the end of a simulated path.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A request that would exceed a hard resource limit.
class ResourceError : public Error {
public:
    using Error::Error;
};

}  // namespace strata
