#pragma once

#include "blowup/params.hpp"
#include "blowup/numerics.hpp"
#include "blowup/scaling.hpp"
#include "blowup/spectral.hpp"
#include "blowup/terms.hpp"
#include "blowup/integrator.hpp"
#include "blowup/shooting.hpp"
#include "blowup/reconstruction.hpp"
#include "blowup/lemmas.hpp"
#include "blowup/io.hpp"
