from setuptools import setup

setup(name="wzexp",
      version="0.1",
      description="Wyner-Ziv region and correct-decoding exponent tools",
      license="MIT",
      packages=[
          "wzexp",
          "wzexp.shared",
          "wzexp.prob",
          "wzexp.simplex",
          "wzexp.region",
          "wzexp.exponent",
          "wzexp.coding",
          "wzexp.cli",
      ],
      install_requires=[
          "numpy>=1.17",
          "scipy>=1.4",
      ],
      zip_safe=False)
