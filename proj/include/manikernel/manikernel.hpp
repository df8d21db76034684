#pragma once

#include "manikernel/definiteness.hpp"
#include "manikernel/error.hpp"
#include "manikernel/features.hpp"
#include "manikernel/grassmann.hpp"
#include "manikernel/io.hpp"
#include "manikernel/kernel.hpp"
#include "manikernel/learn/kfda.hpp"
#include "manikernel/learn/kmeans.hpp"
#include "manikernel/learn/kpca.hpp"
#include "manikernel/learn/mkl.hpp"
#include "manikernel/learn/multiclass.hpp"
#include "manikernel/learn/svm.hpp"
#include "manikernel/matrix_ops.hpp"
#include "manikernel/random.hpp"
#include "manikernel/spd.hpp"
#include "manikernel/synth.hpp"
