//! Independent re-validation of cover certificates.
//!
//! Uses nothing but order relations and fence checking; in particular it
//! never calls the search that produced the certificate.

use crate::engine::{CoverCertificate, Cospan, InvariantValue, Mode, Value};
use crate::poset::subspace;

pub fn validate(c: &Cospan, cert: &CoverCertificate) -> Result<(), String> {
    let n = cert.classes.len();
    if cert.sections.len() != n || cert.fences.len() != n {
        return Err("certificate needs one section and one fence per class".into());
    }
    let mut covered = c.k.empty_set();
    for (i, ((class, s), fence)) in cert.classes.iter().zip(&cert.sections).zip(&cert.fences).enumerate() {
        if class.space != c.k {
            return Err(format!("class {i} is not a subset of K"));
        }
        if cert.mode == Mode::Open && !class.is_open() {
            return Err(format!("class {i} is not open"));
        }
        covered.union_with(&class.members);
        let (z, inc) = subspace(&c.k, &class.members).map_err(|e| e.to_string())?;
        if s.domain() != &z || s.codomain() != &c.a {
            return Err(format!("section {i} has the wrong signature"));
        }
        if !s.is_monotone() {
            return Err(format!("section {i} is not order-preserving"));
        }
        let ps = c.p.after(s).map_err(|e| e.to_string())?;
        let phi_z = c.phi.after(&inc).map_err(|e| e.to_string())?;
        fence.validate(&ps, &phi_z).map_err(|e| format!("class {i}: {e}"))?;
    }
    if covered != c.k.full_set() {
        return Err("classes do not cover K".into());
    }
    Ok(())
}

/// Checks the value/certificate consistency of a computed invariant.
pub fn validate_value(c: &Cospan, v: &InvariantValue) -> Result<(), String> {
    match (v.value, &v.certificate) {
        (Value::Finite(n), Some(cert)) => {
            if cert.classes.len() != n + 1 {
                return Err(format!("value {n} but {} classes", cert.classes.len()));
            }
            validate(c, cert)
        }
        (Value::Infinite, None) => Ok(()),
        (Value::Finite(_), None) => Err("finite value without certificate".into()),
        (Value::Infinite, Some(_)) => Err("infinite value with a certificate".into()),
    }
}
