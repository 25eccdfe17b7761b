//
// Copyright 2026 The dppmt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPPMT_DPPMT_HPP_
#define DPPMT_DPPMT_HPP_

#include "dppmt/data.hpp"
#include "dppmt/errors.hpp"
#include "dppmt/estimators.hpp"
#include "dppmt/harness.hpp"
#include "dppmt/pmt.hpp"
#include "dppmt/privacy.hpp"
#include "dppmt/random.hpp"
#include "dppmt/spectra.hpp"

#endif  // DPPMT_DPPMT_HPP_
