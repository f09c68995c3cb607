pub mod corpus;
pub mod distributions;
pub mod evaluation;
pub mod models;
pub mod validation;
