//! Polynomials in three variables with exact derivatives.
//!
//! Used to build test fields whose gradients, Hessians and Jacobians are
//! known exactly, so finite-difference identities can be checked against
//! something other than finite differences.

use rand::Rng;

use crate::veccalc::{Mat3, ScalarField, Vec3, VectorField};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly3 {
    terms: Vec<(f64, [u32; 3])>,
}

impl Poly3 {
    pub fn new(terms: Vec<(f64, [u32; 3])>) -> Self {
        let mut p = Self { terms: Vec::new() };
        for (c, e) in terms {
            p.add_term(c, e);
        }
        p
    }

    fn add_term(&mut self, c: f64, e: [u32; 3]) {
        if c == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|(_, ex)| *ex == e) {
            Some(t) => t.0 += c,
            None => self.terms.push((c, e)),
        }
    }

    /// Random polynomial of total degree ≤ `degree` with coefficients in [−1, 1].
    pub fn random<R: Rng>(rng: &mut R, degree: u32) -> Self {
        let mut terms = Vec::new();
        for i in 0..=degree {
            for j in 0..=(degree - i) {
                for k in 0..=(degree - i - j) {
                    terms.push((rng.gen_range(-1.0..1.0), [i, j, k]));
                }
            }
        }
        Self::new(terms)
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::default();
        for (c, e) in &self.terms {
            if e[var] > 0 {
                let mut ne = *e;
                ne[var] -= 1;
                out.add_term(c * e[var] as f64, ne);
            }
        }
        out
    }

    pub fn gradient(&self) -> [Poly3; 3] {
        [self.partial(0), self.partial(1), self.partial(2)]
    }

    /// Scalar field with exact gradient and Hessian.
    pub fn to_field(&self) -> ScalarField {
        let p = self.clone();
        let g = self.gradient();
        let h: Vec<Poly3> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| g[i].partial(j))
            .collect();
        let g2 = g.clone();
        ScalarField::new(move |x| p.eval(x))
            .with_gradient(move |x| Vec3::new(g2[0].eval(x), g2[1].eval(x), g2[2].eval(x)))
            .with_hessian(move |x| Mat3::from_fn(|i, j| h[3 * i + j].eval(x)))
    }
}

/// Vector field with polynomial components.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField(pub [Poly3; 3]);

impl PolyField {
    pub fn random<R: Rng>(rng: &mut R, degree: u32) -> Self {
        Self([Poly3::random(rng, degree), Poly3::random(rng, degree), Poly3::random(rng, degree)])
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        Vec3::new(self.0[0].eval(x), self.0[1].eval(x), self.0[2].eval(x))
    }

    /// Field with exact Jacobian.
    pub fn to_field(&self) -> VectorField {
        let p = self.clone();
        let j: Vec<Poly3> = (0..3)
            .flat_map(|i| (0..3).map(move |k| (i, k)))
            .map(|(i, k)| self.0[i].partial(k))
            .collect();
        VectorField::new(move |x| p.eval(x)).with_jacobian(move |x| Mat3::from_fn(|i, k| j[3 * i + k].eval(x)))
    }
}
