from setuptools import setup, find_packages

setup(
    name='sdyna',
    version='0.2.0',
    description='Learn and solve factored MDPs online with incremental decision trees',
    long_description=open('README.md').read() if __import__('os').path.exists('README.md') else '',
    long_description_content_type='text/markdown',
    author='sdyna contributors',
    packages=find_packages(exclude=['tests', 'tests.*']),
    package_data={
        'sdyna.fmdp': ['data/*.json'],
    },
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
    ],
    extras_require={
        'test': ['pytest>=7.0'],
    },
    entry_points={
        'console_scripts': [
            'sdyna=sdyna.main:main',
        ],
    },
    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
)
