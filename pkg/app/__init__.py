# Billiard stability toolkit
