pub mod complexcheck;
pub mod error;
pub mod exactla;
pub mod fespace;
pub mod hodge;
pub mod mesh;
pub mod operators;
pub mod poly;
pub mod rational;
pub mod refcheck;
pub mod report;
