#pragma once

namespace tightlab {

/// Serial is the reference path; parallel must reproduce it bit for bit.
enum class Exec { serial, parallel };

}  // namespace tightlab
